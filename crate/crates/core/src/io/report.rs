//! Run reports as JSON. The schema is the serialized form of [`ReportDoc`].

use serde::{Deserialize, Serialize};

use crate::pipeline::{PipelineConfig, RunReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSizes {
    pub warm_start: usize,
    pub must_include: usize,
    pub generate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallTimesMs {
    pub warm_start: f64,
    pub must_include: f64,
    pub generate: f64,
    pub minimize: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationDoc {
    pub step_incumbents: usize,
    pub greedy_fallbacks: usize,
    pub minimize_non_minimal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigDoc {
    pub weighted: bool,
    pub alpha: f64,
    pub step_time_limit_s: f64,
    pub minimize_time_limit_s: f64,
    pub seed: u64,
    pub backend: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDoc {
    pub suite_size: usize,
    pub universe_size: usize,
    pub phase_sizes: PhaseSizes,
    pub removed_by_minimize: usize,
    pub phase2_steps: usize,
    /// `[case index, cumulative coverage ratio]` per final row.
    pub coverage_curve: Vec<(usize, f64)>,
    pub wall_times_ms: WallTimesMs,
    pub degraded: bool,
    pub degradation: DegradationDoc,
    pub config: ConfigDoc,
}

impl ReportDoc {
    pub fn new(report: &RunReport, cfg: &PipelineConfig) -> Self {
        let ms = |k: usize| report.wall_times[k].as_secs_f64() * 1e3;
        let d = report.degradation;
        ReportDoc {
            suite_size: report.final_suite.len(),
            universe_size: report.universe_size,
            phase_sizes: PhaseSizes {
                warm_start: report.phase_sizes[0],
                must_include: report.phase_sizes[1],
                generate: report.phase_sizes[2],
            },
            removed_by_minimize: report.removed_by_minimize,
            phase2_steps: report.phase2_steps,
            coverage_curve: report.coverage_curve.clone(),
            wall_times_ms: WallTimesMs {
                warm_start: ms(0),
                must_include: ms(1),
                generate: ms(2),
                minimize: ms(3),
            },
            degraded: d.is_degraded(),
            degradation: DegradationDoc {
                step_incumbents: d.step_incumbents,
                greedy_fallbacks: d.greedy_fallbacks,
                minimize_non_minimal: d.minimize_non_minimal,
            },
            config: ConfigDoc {
                weighted: cfg.weighted,
                alpha: cfg.alpha,
                step_time_limit_s: cfg.step_time_limit.as_secs_f64(),
                minimize_time_limit_s: cfg.minimize_time_limit.as_secs_f64(),
                seed: cfg.seed,
                backend: cfg.backend.clone(),
            },
        }
    }
}

pub fn report_json(report: &RunReport, cfg: &PipelineConfig) -> String {
    serde_json::to_string_pretty(&ReportDoc::new(report, cfg)).expect("report serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::fixtures::five_g;
    use crate::pipeline::run;

    #[test]
    fn report_round_trips_through_json() {
        let (sys, cs) = five_g();
        let cfg = PipelineConfig::default();
        let r = run(&sys, &cs, &cfg, None).unwrap();
        let text = report_json(&r, &cfg);
        let doc: ReportDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(doc.suite_size, r.final_suite.len());
        assert_eq!(doc.universe_size, 95);
        assert_eq!(doc.coverage_curve.last().unwrap().1, 1.0);
        assert!(text.contains("\"phase_sizes\""));
    }
}
