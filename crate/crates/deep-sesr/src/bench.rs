//! Forward-pass latency of the design variants.

use std::time::Instant;

use deep_sesr_core::image::ImageTensor;
use deep_sesr_core::model::{DeepSesr, FenetVariant, ModelConfig};
use serde::Serialize;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PassMode {
    Full,
    EnhanceOnly,
}

#[derive(Debug, Clone, Serialize)]
pub struct Latency {
    pub runs: usize,
    pub median_ms: f64,
    pub mean_ms: f64,
}

impl Latency {
    pub fn fps(&self) -> f64 {
        1000.0 / self.median_ms
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Times `runs` rounds after one untimed warm-up round. Each round runs
/// every mode once, so slow drift of the host affects all modes alike.
pub fn time_modes(model: &DeepSesr<f32>, input: &ImageTensor, modes: &[PassMode], runs: usize) -> Result<Vec<Latency>> {
    if runs == 0 {
        return Err(deep_sesr_core::Error::Argument("at least one timed run is required".into()).into());
    }
    let pass = |mode: PassMode| match mode {
        PassMode::Full => model.infer(input),
        PassMode::EnhanceOnly => model.infer_enhance_only(input),
    };
    for &m in modes {
        pass(m)?;
    }
    let mut ms = vec![Vec::with_capacity(runs); modes.len()];
    for _ in 0..runs {
        for (k, &m) in modes.iter().enumerate() {
            let t = Instant::now();
            std::hint::black_box(pass(m)?);
            ms[k].push(t.elapsed().as_secs_f64() * 1e3);
        }
    }
    Ok(ms
        .into_iter()
        .map(|mut v| {
            v.sort_by(f64::total_cmp);
            Latency {
                runs,
                median_ms: median(&v),
                mean_ms: v.iter().sum::<f64>() / runs as f64,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub variant: FenetVariant,
    pub mode: PassMode,
    pub params: usize,
    pub latency: Latency,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub height: usize,
    pub width: usize,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn get(&self, variant: FenetVariant, mode: PassMode) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.variant == variant && r.mode == mode)
    }

    pub fn table(&self) -> String {
        let mut out = format!("input {}x{}\n", self.width, self.height);
        out += &format!("{:<8} {:<13} {:>12} {:>12} {:>12} {:>8}\n", "FENet", "mode", "params", "median ms", "mean ms", "FPS");
        for r in &self.rows {
            let mode = match r.mode {
                PassMode::Full => "full",
                PassMode::EnhanceOnly => "enhance-only",
            };
            let variant = match r.variant {
                FenetVariant::OneD => "1d",
                FenetVariant::TwoD => "2d",
            };
            out += &format!(
                "{:<8} {:<13} {:>12} {:>12.2} {:>12.2} {:>8.2}\n",
                variant,
                mode,
                r.params,
                r.latency.median_ms,
                r.latency.mean_ms,
                r.latency.fps()
            );
        }
        let ratio = |a: Option<&BenchRow>, b: Option<&BenchRow>| match (a, b) {
            (Some(a), Some(b)) => Some(a.latency.median_ms / b.latency.median_ms),
            _ => None,
        };
        if let Some(r) = ratio(self.get(FenetVariant::OneD, PassMode::Full), self.get(FenetVariant::TwoD, PassMode::Full)) {
            out += &format!("1d / 2d median latency (full): {r:.3}\n");
        }
        for v in [FenetVariant::OneD, FenetVariant::TwoD] {
            if let Some(r) = ratio(self.get(v, PassMode::EnhanceOnly), self.get(v, PassMode::Full)) {
                out += &format!("enhance-only / full median latency ({v:?}): {r:.3}\n");
            }
        }
        out
    }
}

/// Times the given FENet variants and pass modes on a mid-gray input.
/// Weights come from `base` for its own variant; other variants are freshly
/// initialized (latency does not depend on weight values).
pub fn benchmark(
    base: &DeepSesr<f32>,
    height: usize,
    width: usize,
    runs: usize,
    variants: &[FenetVariant],
    modes: &[PassMode],
) -> Result<BenchReport> {
    let input = ImageTensor::constant(height, width, [0.5; 3])?;
    let mut rows = Vec::new();
    for &variant in variants {
        let other;
        let model = if base.config().fenet_variant == variant {
            base
        } else {
            other = DeepSesr::<f32>::init(&ModelConfig {
                fenet_variant: variant,
                ..base.config().clone()
            })?;
            &other
        };
        for (&mode, latency) in modes.iter().zip(time_modes(model, &input, modes, runs)?) {
            rows.push(BenchRow {
                variant,
                mode,
                params: model.param_count(),
                latency,
            });
        }
    }
    Ok(BenchReport { height, width, rows })
}
