use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CntsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    #[serde(rename = "R")]
    Reconstructor,
    #[serde(rename = "D")]
    Detector,
}

impl Phase {
    pub fn tag(self) -> &'static str {
        match self {
            Phase::Reconstructor => "R",
            Phase::Detector => "D",
        }
    }
}

/// Labeled-series metrics observed after a pass; never fed back into training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorMetrics {
    pub mse_n: f64,
    pub mse_a: f64,
    pub dis: f64,
    pub f1: f64,
}

/// One pass over the training windows by one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    /// 1-based outer round.
    pub stage: usize,
    pub phase: Phase,
    /// 1-based pass index within the phase.
    pub sub_epoch: usize,
    /// Mean kept-point reconstruction loss over the pass (reconstructor passes).
    pub loss_r: Option<f64>,
    /// Mean detector loss over the pass (detector passes).
    pub loss_d: Option<f64>,
    pub monitor: Option<MonitorMetrics>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub records: Vec<HistoryRecord>,
    /// Wall-clock seconds per outer round, in order; not part of the CSV export.
    #[serde(default)]
    pub stage_seconds: Vec<f64>,
}

pub const HISTORY_HEADER: &str = "stage,phase,sub_epoch,loss_r,loss_d,mse_n,mse_a,dis,f1";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl TrainHistory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records of one phase, in order.
    pub fn phase(&self, phase: Phase) -> impl Iterator<Item = &HistoryRecord> {
        self.records.iter().filter(move |r| r.phase == phase)
    }

    /// Per stage, the mean of `loss_r` over that stage's reconstructor passes.
    pub fn stage_reconstruction_loss(&self) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64, usize)> = Vec::new();
        for r in self.phase(Phase::Reconstructor) {
            let Some(loss) = r.loss_r else { continue };
            match out.last_mut() {
                Some((stage, sum, n)) if *stage == r.stage => {
                    *sum += loss;
                    *n += 1;
                }
                _ => out.push((r.stage, loss, 1)),
            }
        }
        out.into_iter()
            .map(|(s, sum, n)| (s, sum / n as f64))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(HISTORY_HEADER);
        out.push('\n');
        for r in &self.records {
            let m = r.monitor;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.stage,
                r.phase.tag(),
                r.sub_epoch,
                opt(r.loss_r),
                opt(r.loss_d),
                opt(m.map(|m| m.mse_n)),
                opt(m.map(|m| m.mse_a)),
                opt(m.map(|m| m.dis)),
                opt(m.map(|m| m.f1)),
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == HISTORY_HEADER => {}
            _ => {
                return Err(CntsError::Parse {
                    line: 1,
                    message: format!("expected header `{HISTORY_HEADER}`"),
                })
            }
        }
        let mut records = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let line_no = i as u64 + 1;
            let bad = |m: String| CntsError::Parse {
                line: line_no,
                message: m,
            };
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 9 {
                return Err(bad(format!("expected 9 columns, found {}", cols.len())));
            }
            let num = |s: &str| -> Result<Option<f64>> {
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse()
                        .map(Some)
                        .map_err(|_| bad(format!("bad number {s:?}")))
                }
            };
            let int = |s: &str| -> Result<usize> {
                s.parse().map_err(|_| bad(format!("bad integer {s:?}")))
            };
            let phase = match cols[1] {
                "R" => Phase::Reconstructor,
                "D" => Phase::Detector,
                other => return Err(bad(format!("unknown phase {other:?}"))),
            };
            let monitor = match (num(cols[5])?, num(cols[6])?, num(cols[7])?, num(cols[8])?) {
                (Some(mse_n), Some(mse_a), Some(dis), Some(f1)) => Some(MonitorMetrics {
                    mse_n,
                    mse_a,
                    dis,
                    f1,
                }),
                (None, None, None, None) => None,
                _ => return Err(bad("monitor columns partially filled".into())),
            };
            records.push(HistoryRecord {
                stage: int(cols[0])?,
                phase,
                sub_epoch: int(cols[2])?,
                loss_r: num(cols[3])?,
                loss_d: num(cols[4])?,
                monitor,
            });
        }
        Ok(TrainHistory {
            records,
            stage_seconds: Vec::new(),
        })
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| CntsError::io(path, e))
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| CntsError::io(path, e))?;
        Self::from_csv(&text)
    }
}
