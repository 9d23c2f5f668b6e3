//! Plain-text signal and annotation files.
//!
//! Signal file:
//!
//! ```text
//! fs=250
//! MLII,V5
//! -0.145,-0.065
//! -0.145,-0.065
//! ```
//!
//! Line 1 holds the sampling rate, line 2 the comma-separated lead names and
//! every following line one time sample with one value per lead.
//!
//! Annotation file: header `wave,onset,offset` then rows such as `QRS,120,153`
//! with 0-based sample indices and exclusive offsets.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{EcgRecord, FiducialSet, Interval, WaveKind};
use crate::{Error, Result};

pub const ANNOTATION_HEADER: &str = "wave,onset,offset";

pub fn load_record(path: impl AsRef<Path>) -> Result<EcgRecord> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let id = record_id_from_path(path);
    parse_record(&text, &id, path)
}

pub fn save_record(record: &EcgRecord, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_record(record)).map_err(|e| Error::io(path, e))
}

pub fn load_annotations(path: impl AsRef<Path>) -> Result<FiducialSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_annotations(&text, path)
}

pub fn save_annotations(fids: &FiducialSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_annotations(fids)).map_err(|e| Error::io(path, e))
}

/// File stem up to the first `.`, so `sel100-1.ecg` and `sel100-1.ann` share an id.
pub fn record_id_from_path(path: &Path) -> String {
    path.file_name()
        .and_then(|s| s.to_str())
        .map(|s| s.split('.').next().unwrap_or(s).to_string())
        .unwrap_or_default()
}

pub fn parse_record(text: &str, id: &str, path: &Path) -> Result<EcgRecord> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "empty file"))?;
    let fs = header
        .trim()
        .strip_prefix("fs=")
        .ok_or_else(|| Error::parse(path, 1, "expected `fs=<Hz>`"))?
        .trim()
        .parse::<f64>()
        .map_err(|e| Error::parse(path, 1, format!("bad sampling rate: {e}")))?;
    if !(fs > 0.0 && fs.is_finite()) {
        return Err(Error::parse(path, 1, "sampling rate must be positive"));
    }
    let (_, names) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 2, "missing lead names"))?;
    let lead_names: Vec<String> = names.split(',').map(|s| s.trim().to_string()).collect();
    if lead_names.iter().any(String::is_empty) {
        return Err(Error::parse(path, 2, "empty lead name"));
    }
    let mut signal = vec![Vec::new(); lead_names.len()];
    for (line_no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut count = 0;
        for (lead, field) in line.split(',').enumerate() {
            if lead >= signal.len() {
                return Err(Error::parse(
                    path,
                    line_no,
                    format!("expected {} values", signal.len()),
                ));
            }
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|e| Error::parse(path, line_no, format!("bad sample `{field}`: {e}")))?;
            signal[lead].push(v);
            count += 1;
        }
        if count != signal.len() {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected {} values, found {count}", signal.len()),
            ));
        }
    }
    EcgRecord::new(id, fs, lead_names, signal)
}

pub fn format_record(record: &EcgRecord) -> String {
    let mut out = String::with_capacity(16 * record.len() * record.lead_count() + 64);
    let _ = writeln!(out, "fs={}", record.sampling_rate());
    let _ = writeln!(out, "{}", record.lead_names().join(","));
    for i in 0..record.len() {
        for (l, lead) in record.leads().iter().enumerate() {
            if l > 0 {
                out.push(',');
            }
            // `{}` on f64 prints the shortest representation that round-trips.
            let _ = write!(out, "{}", lead[i]);
        }
        out.push('\n');
    }
    out
}

pub fn parse_annotations(text: &str, path: &Path) -> Result<FiducialSet> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, h)) if h.trim() == ANNOTATION_HEADER => {}
        _ => {
            return Err(Error::parse(
                path,
                1,
                format!("expected header `{ANNOTATION_HEADER}`"),
            ))
        }
    }
    let mut per_wave: [Vec<Interval>; 3] = Default::default();
    for (line_no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::parse(path, line_no, "expected `wave,onset,offset`"));
        }
        let wave: WaveKind = fields[0]
            .parse()
            .map_err(|e: String| Error::parse(path, line_no, e))?;
        let parse_idx = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| Error::parse(path, line_no, format!("bad index `{s}`: {e}")))
        };
        let onset = parse_idx(fields[1])?;
        let offset = parse_idx(fields[2])?;
        let iv = Interval::new(onset, offset).ok_or_else(|| {
            Error::parse(
                path,
                line_no,
                format!("offset {offset} must be greater than onset {onset}"),
            )
        })?;
        per_wave[wave.index()].push(iv);
    }
    for list in &mut per_wave {
        list.sort();
    }
    let [p, qrs, t] = per_wave;
    FiducialSet::from_waves(p, qrs, t).map_err(|e| Error::parse(path, 0, e.to_string()))
}

pub fn format_annotations(fids: &FiducialSet) -> String {
    let mut out = String::from(ANNOTATION_HEADER);
    out.push('\n');
    for (wave, iv) in fids.timeline() {
        let _ = writeln!(out, "{},{},{}", wave, iv.onset, iv.offset);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn minimal_record() {
        let text = "fs=250\nI\n0.1\n0.2\n-0.3\n0\n";
        let r = parse_record(text, "x", Path::new("x.ecg")).unwrap();
        assert_eq!(r.lead_count(), 1);
        assert_eq!(r.len(), 4);
        assert_eq!(r.lead(0)[2], -0.3);
        assert_eq!(r.sampling_rate(), 250.0);
    }

    #[test]
    fn malformed_rows_report_line_numbers() {
        let err = parse_record("fs=250\nI,II\n0.1,0.2\n0.3\n", "x", Path::new("x")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
        let err = parse_record("rate=250\nI\n", "x", Path::new("x")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse_record("fs=250\nI\n1,0\n", "x", Path::new("x")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
        let err = parse_record("fs=250\nI\nabc\n", "x", Path::new("x")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn annotation_offset_not_after_onset_is_rejected() {
        let err = parse_annotations("wave,onset,offset\nQRS,10,20\nT,40,40\n", Path::new("a"))
            .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse_annotations("wave,onset,offset\nQRS,30,20\n", Path::new("a")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_annotations("w,on,off\n", Path::new("a")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse_annotations("wave,onset,offset\nU,1,2\n", Path::new("a")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn annotation_rows() {
        let f = parse_annotations(
            "wave,onset,offset\nQRS,120,153\nP,90,110\nT,200,260\nQRS,320,350\n",
            Path::new("a"),
        )
        .unwrap();
        assert_eq!(f.get(WaveKind::Qrs).len(), 2);
        assert_eq!(f.get(WaveKind::P), &[Interval::new(90, 110).unwrap()]);
        let text = format_annotations(&f);
        assert!(text.starts_with("wave,onset,offset\nP,90,110\nQRS,120,153\n"));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rec = EcgRecord::new(
            "s1-a",
            500.0,
            vec!["I".into(), "V1".into()],
            vec![vec![0.1, 1e-12, -3.25], vec![f64::MIN_POSITIVE, 7.0, 0.3333333333333333]],
        )
        .unwrap();
        let p = dir.path().join("s1-a.ecg");
        save_record(&rec, &p).unwrap();
        assert_eq!(load_record(&p).unwrap(), rec);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn twelve_lead_round_trip(
            len in 1usize..40,
            fs in prop_oneof![Just(250.0), Just(500.0), Just(2000.0), 1.0f64..5000.0],
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let names: Vec<String> = (0..12).map(|i| format!("L{i}")).collect();
            let signal: Vec<Vec<f64>> = (0..12)
                .map(|_| (0..len).map(|_| rng.random_range(-5.0..5.0)).collect())
                .collect();
            let rec = EcgRecord::new("r", fs, names, signal).unwrap();
            let back = parse_record(&format_record(&rec), "r", Path::new("r")).unwrap();
            for (a, b) in rec.leads().iter().zip(back.leads()) {
                for (x, y) in a.iter().zip(b) {
                    prop_assert!((x - y).abs() <= 1e-9);
                }
            }
            prop_assert_eq!(back.sampling_rate(), fs);
        }

        #[test]
        fn annotations_round_trip(raw in proptest::collection::vec((0usize..3, 0usize..500, 1usize..30), 0..30)) {
            let mut per: [Vec<Interval>; 3] = Default::default();
            for (w, on, len) in raw {
                per[w].push(Interval::new(on, on + len).unwrap());
            }
            // keep a disjoint subsequence per wave
            for list in &mut per {
                list.sort();
                let mut kept: Vec<Interval> = Vec::new();
                for iv in list.drain(..) {
                    if kept.last().map_or(true, |p| iv.onset >= p.offset) {
                        kept.push(iv);
                    }
                }
                *list = kept;
            }
            let [p, q, t] = per;
            let f = FiducialSet::from_waves(p, q, t).unwrap();
            let back = parse_annotations(&format_annotations(&f), Path::new("a")).unwrap();
            prop_assert_eq!(back, f);
        }
    }
}
