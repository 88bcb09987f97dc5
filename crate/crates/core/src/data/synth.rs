//! Deterministic synthetic series with injected spike and level-shift anomalies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::series::{Role, TimeSeries};
use crate::error::{CntsError, Result};
use crate::seed::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnomalyKind {
    /// Adds `magnitude * scale` to every point of the span independently.
    Spike,
    /// Offsets the whole span by `magnitude * scale`.
    LevelShift,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anomaly {
    pub position: usize,
    pub span: usize,
    pub kind: AnomalyKind,
    /// Signed, in units of the base signal's standard deviation.
    pub magnitude: f64,
}

/// `level + amplitude * sin(2 pi t / period)`; amplitude 0 gives a flat level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseSignal {
    pub level: f64,
    pub period: f64,
    pub amplitude: f64,
}

impl BaseSignal {
    pub fn sine(period: f64, amplitude: f64) -> Self {
        BaseSignal {
            level: 0.0,
            period,
            amplitude,
        }
    }

    pub fn level(level: f64) -> Self {
        BaseSignal {
            level,
            period: 1.0,
            amplitude: 0.0,
        }
    }

    fn at(&self, t: usize) -> f64 {
        self.level + self.amplitude * (std::f64::consts::TAU * t as f64 / self.period).sin()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub length: usize,
    pub base: BaseSignal,
    pub noise_std: f64,
    pub anomalies: Vec<Anomaly>,
    pub seed: u64,
}

/// Generates a labeled series; labels are 1 exactly on the anomaly spans.
pub fn synth_series(spec: &SynthSpec, name: &str, role: Role) -> Result<TimeSeries> {
    if spec.length == 0 {
        return Err(CntsError::Validation(
            "synthetic length must be positive".into(),
        ));
    }
    if !(spec.base.period > 0.0) || !(spec.noise_std >= 0.0) {
        return Err(CntsError::Validation(
            "period must be positive and noise std non-negative".into(),
        ));
    }
    let mut spans: Vec<(usize, usize)> = Vec::with_capacity(spec.anomalies.len());
    for a in &spec.anomalies {
        if a.span == 0 || a.position + a.span > spec.length {
            return Err(CntsError::Validation(format!(
                "anomaly at {} with span {} is out of bounds",
                a.position, a.span
            )));
        }
        spans.push((a.position, a.position + a.span));
    }
    spans.sort_unstable();
    if spans.windows(2).any(|w| w[1].0 < w[0].1) {
        return Err(CntsError::Validation("anomaly spans overlap".into()));
    }

    let base: Vec<f64> = (0..spec.length).map(|t| spec.base.at(t)).collect();
    let n = base.len() as f64;
    let mean = base.iter().sum::<f64>() / n;
    let base_std = (base.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let scale = if base_std > 1e-12 {
        base_std
    } else if spec.noise_std > 0.0 {
        spec.noise_std
    } else {
        1.0
    };

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut values = base;
    if spec.noise_std > 0.0 {
        let noise =
            Normal::new(0.0, spec.noise_std).map_err(|e| CntsError::Validation(e.to_string()))?;
        for v in values.iter_mut() {
            *v += noise.sample(&mut rng);
        }
    }
    let mut labels = vec![0u8; spec.length];
    for a in &spec.anomalies {
        for t in a.position..a.position + a.span {
            values[t] += a.magnitude * scale;
            labels[t] = 1;
        }
    }
    TimeSeries::new(name, values, Some(labels), role)
}

/// Parameters of the default train/test benchmark pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkSpec {
    pub length: usize,
    pub base: BaseSignal,
    pub noise_std: f64,
    pub spikes: usize,
    pub level_shifts: usize,
    pub shift_span: usize,
    /// Absolute spike magnitude range, in base standard deviations; the sign is random.
    pub spike_magnitude: (f64, f64),
    pub shift_magnitude: (f64, f64),
    /// Minimum number of clean points between two anomalies.
    pub min_gap: usize,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        BenchmarkSpec {
            length: 4000,
            base: BaseSignal::sine(50.0, 1.0),
            noise_std: 0.05,
            spikes: 40,
            level_shifts: 4,
            shift_span: 10,
            spike_magnitude: (1.5, 2.5),
            shift_magnitude: (1.5, 2.5),
            min_gap: 16,
        }
    }
}

impl BenchmarkSpec {
    /// A clean noiseless sine of the benchmark's shape.
    pub fn noiseless(&self) -> BenchmarkSpec {
        BenchmarkSpec {
            noise_std: 0.0,
            spikes: 0,
            level_shifts: 0,
            ..self.clone()
        }
    }

    /// Draws non-overlapping anomaly placements for one series.
    pub fn place_anomalies(&self, seed: u64) -> Result<Vec<Anomaly>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut placed: Vec<Anomaly> = Vec::new();
        let mut request: Vec<(AnomalyKind, usize)> = Vec::new();
        request.extend(std::iter::repeat_n(
            (AnomalyKind::LevelShift, self.shift_span),
            self.level_shifts,
        ));
        request.extend(std::iter::repeat_n((AnomalyKind::Spike, 1), self.spikes));
        for (kind, span) in request {
            let (lo, hi) = match kind {
                AnomalyKind::Spike => self.spike_magnitude,
                AnomalyKind::LevelShift => self.shift_magnitude,
            };
            if span + 2 * self.min_gap > self.length {
                return Err(CntsError::Validation("benchmark series too short".into()));
            }
            let mut attempts = 0;
            let position = loop {
                attempts += 1;
                if attempts > 10_000 {
                    return Err(CntsError::Validation(
                        "could not place anomalies without overlap".into(),
                    ));
                }
                let p = rng.gen_range(self.min_gap..=self.length - span - self.min_gap);
                let clear = placed.iter().all(|a| {
                    p + span + self.min_gap <= a.position || a.position + a.span + self.min_gap <= p
                });
                if clear {
                    break p;
                }
            };
            let magnitude = rng.gen_range(lo..=hi) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            placed.push(Anomaly {
                position,
                span,
                kind,
                magnitude,
            });
        }
        placed.sort_by_key(|a| a.position);
        Ok(placed)
    }

    /// Full specification of one series drawn from this benchmark.
    pub fn series_spec(&self, seed: u64) -> Result<SynthSpec> {
        Ok(SynthSpec {
            length: self.length,
            base: self.base,
            noise_std: self.noise_std,
            anomalies: self.place_anomalies(derive_seed(seed, 0xA))?,
            seed: derive_seed(seed, 0xB),
        })
    }

    /// Train (labels stripped) and labeled test series drawn with independent streams.
    pub fn generate(&self, seed: u64) -> Result<(TimeSeries, TimeSeries)> {
        let train = synth_series(
            &self.series_spec(derive_seed(seed, 1))?,
            "synth-train",
            Role::Train,
        )?;
        let test = synth_series(
            &self.series_spec(derive_seed(seed, 2))?,
            "synth-test",
            Role::Test,
        )?;
        Ok((train.without_labels(), test))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plain(anomalies: Vec<Anomaly>, seed: u64) -> SynthSpec {
        SynthSpec {
            length: 200,
            base: BaseSignal::sine(25.0, 2.0),
            noise_std: 0.1,
            anomalies,
            seed,
        }
    }

    #[test]
    fn no_anomalies_no_labels() {
        let s = synth_series(&plain(vec![], 1), "s", Role::Test).unwrap();
        assert!(s.labels().unwrap().iter().all(|&l| l == 0));
    }

    #[test]
    fn single_spike_labels_one_point() {
        let spike = Anomaly {
            position: 10,
            span: 1,
            kind: AnomalyKind::Spike,
            magnitude: 5.0,
        };
        let with = synth_series(&plain(vec![spike], 3), "s", Role::Test).unwrap();
        let without = synth_series(&plain(vec![], 3), "s", Role::Test).unwrap();
        let labels = with.labels().unwrap();
        assert_eq!(labels.iter().filter(|&&l| l == 1).count(), 1);
        assert_eq!(labels[10], 1);
        let bump = with.values()[10] - without.values()[10];
        assert!((bump - 5.0 * 2.0 / 2f64.sqrt()).abs() < 1e-2);
    }

    #[test]
    fn overlapping_spans_rejected() {
        let a = Anomaly {
            position: 10,
            span: 5,
            kind: AnomalyKind::LevelShift,
            magnitude: 1.0,
        };
        let b = Anomaly { position: 12, ..a };
        assert!(matches!(
            synth_series(&plain(vec![a, b], 0), "s", Role::Test),
            Err(CntsError::Validation(_))
        ));
    }

    #[test]
    fn seeds_control_output() {
        let a = synth_series(&plain(vec![], 4), "s", Role::Test).unwrap();
        let b = synth_series(&plain(vec![], 4), "s", Role::Test).unwrap();
        let c = synth_series(&plain(vec![], 5), "s", Role::Test).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn default_benchmark_anomaly_rate() {
        for seed in 0..5 {
            let (train, test) = BenchmarkSpec::default().generate(seed).unwrap();
            assert!(train.labels().is_none());
            let rate = test.anomaly_rate().unwrap();
            assert!((rate - 0.02).abs() <= 0.005, "rate {rate}");
        }
    }
}
