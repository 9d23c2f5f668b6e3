use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{uniform, GenerationConfig};

/// Rules shared by every cycle of one record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalRules {
    pub vt: bool,
    pub af: bool,
    /// Period of the dropped QRS+T when an AV block is active.
    pub av_block: Option<u32>,
    /// Sinus-arrest pause in samples at the target rate.
    pub sinus_arrest: Option<usize>,
    /// ST offset as a signed fraction of each cycle's QRS amplitude.
    pub st_shift: Option<f64>,
}

/// Per-cycle rules after global constraints have been applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleRules {
    pub has_p: bool,
    /// QRS complex and its T wave.
    pub has_qrst: bool,
    pub has_pq: bool,
    pub has_st: bool,
    pub has_tp: bool,
    pub has_u: bool,
    pub ectopic: bool,
    pub merge_p_qrs: bool,
    pub merge_qrs_t: bool,
    pub merge_t_nextp: bool,
}

impl CycleRules {
    pub fn full() -> Self {
        CycleRules {
            has_p: true,
            has_qrst: true,
            has_pq: true,
            has_st: true,
            has_tp: true,
            has_u: false,
            ectopic: false,
            merge_p_qrs: false,
            merge_qrs_t: false,
            merge_t_nextp: false,
        }
    }

    /// Compact `key=0/1` form used in provenance logs.
    pub fn log_fields(&self) -> String {
        let b = |v: bool| u8::from(v);
        format!(
            "p={} qrst={} pq={} st={} tp={} u={} ectopic={} merge_pqrs={} merge_qrst={} merge_tp={}",
            b(self.has_p),
            b(self.has_qrst),
            b(self.has_pq),
            b(self.has_st),
            b(self.has_tp),
            b(self.has_u),
            b(self.ectopic),
            b(self.merge_p_qrs),
            b(self.merge_qrs_t),
            b(self.merge_t_nextp)
        )
    }
}

/// Draws the global rules.
///
/// Five uniforms are drawn first, in the order vt, af, av_block,
/// sinus_arrest, st_shift; each flag is set when its uniform falls below the
/// configured probability. VT takes precedence over AF. The AV period, arrest
/// duration and ST offset are drawn afterwards, always, so the number of
/// draws does not depend on the outcome.
pub fn sample_global_rules<R: Rng + ?Sized>(config: &GenerationConfig, rng: &mut R) -> GlobalRules {
    let u: [f64; 5] = std::array::from_fn(|_| rng.random::<f64>());
    let vt = u[0] < config.p_vt;
    let af = !vt && u[1] < config.p_af;
    let (lo, hi) = config.av_block_period;
    let period = rng.random_range(lo..=hi);
    let arrest_s = uniform(rng, config.sinus_arrest_duration);
    let shift = uniform(rng, config.st_shift);
    GlobalRules {
        vt,
        af,
        av_block: (u[2] < config.p_av_block).then_some(period),
        sinus_arrest: (u[3] < config.p_sinus_arrest)
            .then(|| ((arrest_s * config.target_fs).round() as usize).max(1)),
        st_shift: (u[4] < config.p_st_shift).then_some(shift),
    }
}

/// Draws the rules of cycle `cycle_index`.
///
/// Ten uniforms are drawn in the order no_p, no_qrst, no_pq, no_st, no_tp,
/// u_wave, ectopic, merge_pqrs, merge_qrst, merge_tp. Constraints applied
/// afterwards: an AV block drops the QRS+T of every `period`-th cycle while
/// keeping its P; VT, AF and ectopic beats have no P wave; without a QRS
/// there is no ectopy, ST, U wave or QRS merge; a merge removes the pause it
/// bridges. A cycle left with nothing keeps its TP pause.
pub fn sample_cycle_rules<R: Rng + ?Sized>(
    config: &GenerationConfig,
    global: &GlobalRules,
    cycle_index: usize,
    rng: &mut R,
) -> CycleRules {
    let u: [f64; 10] = std::array::from_fn(|_| rng.random::<f64>());
    let mut r = CycleRules {
        has_p: u[0] >= config.p_no_p,
        has_qrst: u[1] >= config.p_no_qrst,
        has_pq: u[2] >= config.p_no_pq,
        has_st: u[3] >= config.p_no_st,
        has_tp: u[4] >= config.p_no_tp,
        has_u: u[5] < config.p_u_wave,
        ectopic: u[6] < config.p_ectopic,
        merge_p_qrs: u[7] < config.p_merge_pqrs,
        merge_qrs_t: u[8] < config.p_merge_qrst,
        merge_t_nextp: u[9] < config.p_merge_tp,
    };
    if let Some(period) = global.av_block {
        let period = period.max(1) as usize;
        if cycle_index % period == period - 1 {
            r.has_qrst = false;
            r.has_p = true;
        }
    }
    if !r.has_qrst {
        r.ectopic = false;
        r.has_st = false;
        r.has_u = false;
        r.merge_p_qrs = false;
        r.merge_qrs_t = false;
    }
    if global.vt || global.af || r.ectopic {
        r.has_p = false;
    }
    if !r.has_p {
        r.merge_p_qrs = false;
    }
    if r.merge_p_qrs {
        r.has_pq = false;
    }
    if r.merge_qrs_t {
        r.has_st = false;
    }
    if r.merge_t_nextp {
        r.has_tp = false;
    }
    if !(r.has_p || r.has_qrst || r.has_pq || r.has_st || r.has_tp) {
        r.has_tp = true;
        r.merge_t_nextp = false;
    }
    r
}
