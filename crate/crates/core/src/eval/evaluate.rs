use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::matching::{correspondence_matrix, resolve_matches, Match};
use super::metrics::{delineation_errors, DelineationErrors, DetectionMetrics, ErrorSign};
use super::normalize::{normalize_input, DEFAULT_WINDOW};
use super::vote::majority_vote;
use crate::data::Interval;
use crate::{fiducials_from_mask, DelineationMask, EcgRecord, Error, FiducialSet, Result, WaveKind};

/// Maps a normalized single-lead signal to a mask of the same length.
pub trait Predictor {
    fn predict(&self, signal: &[f64]) -> Result<DelineationMask>;
}

impl<F> Predictor for F
where
    F: Fn(&[f64]) -> Result<DelineationMask>,
{
    fn predict(&self, signal: &[f64]) -> Result<DelineationMask> {
        self(signal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    /// Every lead is scored independently and the counts are pooled.
    #[default]
    Single,
    /// Each true wave is scored on the lead that matches it best.
    Multi,
    /// Lead masks are merged by majority vote before scoring.
    Fused,
}

impl EvalMode {
    pub fn name(self) -> &'static str {
        match self {
            EvalMode::Single => "single",
            EvalMode::Multi => "multi",
            EvalMode::Fused => "fused",
        }
    }
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "single" => Ok(EvalMode::Single),
            "multi" => Ok(EvalMode::Multi),
            "fused" => Ok(EvalMode::Fused),
            _ => Err(Error::Config(format!("unknown evaluation mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub mode: EvalMode,
    pub normalization_window: usize,
    /// Probability threshold when turning network outputs into masks.
    pub threshold: f64,
    pub error_sign: ErrorSign,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            mode: EvalMode::Single,
            normalization_window: DEFAULT_WINDOW,
            threshold: 0.5,
            error_sign: ErrorSign::PredMinusTrue,
        }
    }
}

/// Accumulated counts and errors of one wave kind.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WaveTally {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub errors: DelineationErrors,
}

impl WaveTally {
    pub fn detection(&self) -> DetectionMetrics {
        DetectionMetrics::from_counts(self.tp, self.fp, self.fn_)
    }

    fn merge(&mut self, other: &WaveTally) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.errors.onset_ms.extend(&other.errors.onset_ms);
        self.errors.offset_ms.extend(&other.errors.offset_ms);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mode: EvalMode,
    /// Distinct sampling rates of the evaluated records, ascending.
    pub sampling_rates: Vec<f64>,
    pub records: usize,
    /// Indexed by [`WaveKind::index`].
    pub waves: [WaveTally; 3],
}

pub const REPORT_HEADER: &str = "wave,Pr,Re,F1,onE_mean,onE_sd,offE_mean,offE_sd";

#[derive(Debug, Clone, PartialEq, Serialize)]
struct WaveSummary {
    wave: WaveKind,
    tp: usize,
    fp: usize,
    #[serde(rename = "fn")]
    fn_: usize,
    precision: f64,
    recall: f64,
    f1: f64,
    onset_mean_ms: Option<f64>,
    onset_sd_ms: Option<f64>,
    offset_mean_ms: Option<f64>,
    offset_sd_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct ReportSummary {
    mode: EvalMode,
    sampling_rates: Vec<f64>,
    records: usize,
    waves: Vec<WaveSummary>,
}

impl MetricsReport {
    pub fn empty(mode: EvalMode) -> Self {
        MetricsReport { mode, sampling_rates: Vec::new(), records: 0, waves: Default::default() }
    }

    pub fn wave(&self, w: WaveKind) -> &WaveTally {
        &self.waves[w.index()]
    }

    pub fn detection(&self, w: WaveKind) -> DetectionMetrics {
        self.wave(w).detection()
    }

    pub fn errors(&self, w: WaveKind) -> &DelineationErrors {
        &self.wave(w).errors
    }

    pub fn merge(&mut self, other: &MetricsReport) {
        for (a, b) in self.waves.iter_mut().zip(&other.waves) {
            a.merge(b);
        }
        self.records += other.records;
        for &fs in &other.sampling_rates {
            if !self.sampling_rates.contains(&fs) {
                self.sampling_rates.push(fs);
            }
        }
        self.sampling_rates.sort_by(f64::total_cmp);
    }

    /// Header plus one row per wave; errors in ms, `NaN` without matches.
    pub fn to_table(&self) -> String {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        for w in WaveKind::ALL {
            let d = self.detection(w);
            let (om, os) = self.errors(w).onset_summary();
            let (fm, fs) = self.errors(w).offset_summary();
            out += &format!(
                "{},{:.4},{:.4},{:.4},{:.2},{:.2},{:.2},{:.2}\n",
                w.name(),
                d.precision,
                d.recall,
                d.f1,
                om,
                os,
                fm,
                fs
            );
        }
        out
    }

    /// Machine-readable summary: per-wave counts, rates and error moments.
    pub fn to_json(&self) -> serde_json::Value {
        let finite = |x: f64| x.is_finite().then_some(x);
        let waves = WaveKind::ALL
            .iter()
            .map(|&w| {
                let d = self.detection(w);
                let (om, os) = self.errors(w).onset_summary();
                let (fm, fs) = self.errors(w).offset_summary();
                WaveSummary {
                    wave: w,
                    tp: d.tp,
                    fp: d.fp,
                    fn_: d.fn_,
                    precision: d.precision,
                    recall: d.recall,
                    f1: d.f1,
                    onset_mean_ms: finite(om),
                    onset_sd_ms: finite(os),
                    offset_mean_ms: finite(fm),
                    offset_sd_ms: finite(fs),
                }
            })
            .collect();
        serde_json::to_value(ReportSummary {
            mode: self.mode,
            sampling_rates: self.sampling_rates.clone(),
            records: self.records,
            waves,
        })
        .expect("summary is serializable")
    }
}

fn match_wave(truth: &[Interval], pred: &[Interval]) -> Vec<Match> {
    resolve_matches(&correspondence_matrix(truth, pred), truth, pred)
}

fn tally(truth: &[Interval], pred: &[Interval], fs: f64, sign: ErrorSign) -> WaveTally {
    let m = match_wave(truth, pred);
    WaveTally {
        tp: m.len(),
        fp: pred.len() - m.len(),
        fn_: truth.len() - m.len(),
        errors: delineation_errors(&m, fs, sign),
    }
}

/// Scores already-predicted masks, one per lead, against shared annotations.
pub fn evaluate_masks(
    truth: &FiducialSet,
    lead_masks: &[DelineationMask],
    sampling_rate: f64,
    mode: EvalMode,
    sign: ErrorSign,
) -> Result<MetricsReport> {
    if lead_masks.is_empty() {
        return Err(Error::InvalidRecord("evaluation needs at least one lead".into()));
    }
    let mut report = MetricsReport::empty(mode);
    report.records = 1;
    report.sampling_rates = vec![sampling_rate];
    match mode {
        EvalMode::Single => {
            for mask in lead_masks {
                let pred = fiducials_from_mask(mask);
                for w in WaveKind::ALL {
                    report.waves[w.index()].merge(&tally(truth.get(w), pred.get(w), sampling_rate, sign));
                }
            }
        }
        EvalMode::Fused => {
            let pred = fiducials_from_mask(&majority_vote(lead_masks)?);
            for w in WaveKind::ALL {
                report.waves[w.index()] = tally(truth.get(w), pred.get(w), sampling_rate, sign);
            }
        }
        EvalMode::Multi => {
            let preds: Vec<FiducialSet> = lead_masks.iter().map(fiducials_from_mask).collect();
            for w in WaveKind::ALL {
                let t = truth.get(w);
                let mut best: Vec<Option<Match>> = vec![None; t.len()];
                let mut fp = usize::MAX;
                for p in &preds {
                    let m = match_wave(t, p.get(w));
                    fp = fp.min(p.get(w).len() - m.len());
                    for x in m {
                        let slot = &mut best[x.truth];
                        if slot.is_none_or(|b| x.cost() < b.cost()) {
                            *slot = Some(x);
                        }
                    }
                }
                let chosen: Vec<Match> = best.into_iter().flatten().collect();
                report.waves[w.index()] = WaveTally {
                    tp: chosen.len(),
                    fp,
                    fn_: t.len() - chosen.len(),
                    errors: delineation_errors(&chosen, sampling_rate, sign),
                };
            }
        }
    }
    Ok(report)
}

/// Normalizes every lead, runs every predictor on it and scores the result.
/// Several predictors are merged per lead by majority vote.
pub fn evaluate(
    record: &EcgRecord,
    truth: &FiducialSet,
    predictors: &[&dyn Predictor],
    config: &EvaluationConfig,
) -> Result<MetricsReport> {
    if record.lead_count() == 0 {
        return Err(Error::InvalidRecord(format!("record {} has no leads", record.id())));
    }
    if predictors.is_empty() {
        return Err(Error::Config("evaluation needs at least one predictor".into()));
    }
    let mut lead_masks = Vec::with_capacity(record.lead_count());
    for lead in record.leads() {
        let x = normalize_input(lead, config.normalization_window);
        let mut masks = Vec::with_capacity(predictors.len());
        for p in predictors {
            let m = p.predict(&x)?;
            if m.len() != x.len() {
                return Err(Error::Shape(format!("predictor returned {} samples for {}", m.len(), x.len())));
            }
            masks.push(m);
        }
        lead_masks.push(if masks.len() == 1 { masks.pop().unwrap() } else { majority_vote(&masks)? });
    }
    evaluate_masks(truth, &lead_masks, record.sampling_rate(), config.mode, config.error_sign)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask_from_fiducials;

    fn fixture() -> (EcgRecord, FiducialSet) {
        let iv = |a, b| Interval::new(a, b).unwrap();
        let fids = FiducialSet::from_waves(
            vec![iv(10, 30), iv(210, 230)],
            vec![iv(50, 70), iv(250, 270)],
            vec![iv(100, 150), iv(300, 350)],
        )
        .unwrap();
        let lead: Vec<f64> = (0..400).map(|i| (i as f64 * 0.1).sin()).collect();
        let rec = EcgRecord::new("fixture", 250.0, vec!["I".into(), "II".into()], vec![lead.clone(), lead]).unwrap();
        (rec, fids)
    }

    fn shifted(f: &FiducialSet, by: isize) -> FiducialSet {
        let s = |v: &[Interval]| v.iter().map(|i| i.shifted(by).unwrap()).collect::<Vec<_>>();
        FiducialSet::from_waves(s(f.get(WaveKind::P)), s(f.get(WaveKind::Qrs)), s(f.get(WaveKind::T))).unwrap()
    }

    #[test]
    fn perfect_predictor_every_mode() {
        let (rec, fids) = fixture();
        let mask = mask_from_fiducials(&fids, rec.len()).unwrap();
        let oracle = move |_: &[f64]| Ok(mask.clone());
        for mode in [EvalMode::Single, EvalMode::Multi, EvalMode::Fused] {
            let cfg = EvaluationConfig { mode, ..Default::default() };
            let r = evaluate(&rec, &fids, &[&oracle], &cfg).unwrap();
            for w in WaveKind::ALL {
                assert_eq!(r.detection(w).f1, 1.0);
                assert!(r.errors(w).onset_ms.iter().chain(&r.errors(w).offset_ms).all(|&e| e == 0.0));
            }
        }
    }

    #[test]
    fn one_lead_late() {
        let (rec, fids) = fixture();
        let good = mask_from_fiducials(&fids, rec.len()).unwrap();
        let late = mask_from_fiducials(&shifted(&fids, 2), rec.len()).unwrap();
        let masks = [good, late];
        let single = evaluate_masks(&fids, &masks, 250.0, EvalMode::Single, ErrorSign::PredMinusTrue).unwrap();
        let multi = evaluate_masks(&fids, &masks, 250.0, EvalMode::Multi, ErrorSign::PredMinusTrue).unwrap();
        for w in WaveKind::ALL {
            assert!(multi.errors(w).onset_ms.iter().all(|&e| e == 0.0));
            assert_eq!(multi.detection(w).f1, 1.0);
            let (m, _) = single.errors(w).onset_summary();
            assert!((m - 4.0).abs() < 1e-12);
            let mut pooled = single.errors(w).onset_ms.clone();
            pooled.sort_by(f64::total_cmp);
            assert_eq!(pooled, [0.0, 0.0, 8.0, 8.0]);
        }
    }

    #[test]
    fn fused_ignores_single_empty_lead() {
        let (rec, fids) = fixture();
        let good = mask_from_fiducials(&fids, rec.len()).unwrap();
        let empty = DelineationMask::new(rec.len()).unwrap();
        let fused = evaluate_masks(&fids, &[good.clone(), good.clone(), empty], 250.0, EvalMode::Fused, ErrorSign::PredMinusTrue).unwrap();
        let alone = evaluate_masks(&fids, &[good], 250.0, EvalMode::Single, ErrorSign::PredMinusTrue).unwrap();
        assert_eq!(fused.waves, alone.waves);
    }

    #[test]
    fn multi_fp_is_minimum_over_leads() {
        let (rec, fids) = fixture();
        let good = mask_from_fiducials(&fids, rec.len()).unwrap();
        let mut noisy = good.clone();
        noisy.channel_mut(WaveKind::T)[380..390].iter_mut().for_each(|v| *v = true);
        let r = evaluate_masks(&fids, &[noisy.clone(), good], 250.0, EvalMode::Multi, ErrorSign::PredMinusTrue).unwrap();
        assert_eq!(r.wave(WaveKind::T).fp, 0);
        let r = evaluate_masks(&fids, &[noisy.clone(), noisy], 250.0, EvalMode::Multi, ErrorSign::PredMinusTrue).unwrap();
        assert_eq!(r.wave(WaveKind::T).fp, 1);
    }

    #[test]
    fn amplitude_scaling_is_invisible_after_normalization() {
        let (rec, fids) = fixture();
        // threshold predictor: QRS wherever the normalized signal exceeds 1
        let thresh = |x: &[f64]| {
            let mut m = DelineationMask::new(x.len())?;
            for (i, v) in x.iter().enumerate() {
                m.channel_mut(WaveKind::Qrs)[i] = *v > 1.0;
            }
            Ok(m)
        };
        let cfg = EvaluationConfig::default();
        let a = evaluate(&rec, &fids, &[&thresh], &cfg).unwrap();
        let scaled: Vec<Vec<f64>> = rec.leads().iter().map(|l| l.iter().map(|v| v * 37.5).collect()).collect();
        let rec2 = EcgRecord::new("s", 250.0, rec.lead_names().to_vec(), scaled).unwrap();
        let b = evaluate(&rec2, &fids, &[&thresh], &cfg).unwrap();
        assert_eq!(a.waves, b.waves);
    }

    #[test]
    fn report_layout() {
        let (rec, fids) = fixture();
        let good = mask_from_fiducials(&fids, rec.len()).unwrap();
        let mut r = evaluate_masks(&fids, &[good.clone()], 250.0, EvalMode::Single, ErrorSign::PredMinusTrue).unwrap();
        r.merge(&evaluate_masks(&fids, &[good], 500.0, EvalMode::Single, ErrorSign::PredMinusTrue).unwrap());
        let table = r.to_table();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines[0], REPORT_HEADER);
        assert_eq!(lines[1], "P,1.0000,1.0000,1.0000,0.00,0.00,0.00,0.00");
        assert_eq!(lines.len(), 4);
        let json = r.to_json();
        assert_eq!(json["records"], 2);
        assert_eq!(json["sampling_rates"], serde_json::json!([250.0, 500.0]));
        assert_eq!(json["waves"][1]["wave"], "QRS");
        assert_eq!(json["waves"][1]["tp"], 4);
        let empty = MetricsReport::empty(EvalMode::Fused);
        assert!(empty.to_table().contains("NaN"));
        assert!(empty.to_json()["waves"][0]["onset_mean_ms"].is_null());
    }

    #[test]
    fn no_leads_is_an_input_error() {
        let (_, fids) = fixture();
        assert!(evaluate_masks(&fids, &[], 250.0, EvalMode::Single, ErrorSign::PredMinusTrue).is_err());
    }
}
