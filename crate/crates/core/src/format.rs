//! JSON files for pulse sequences and target unitaries.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::pulses::{Pulse, PulseKind, PulseSequence};
use crate::rotations::C64;

pub const FORMAT_VERSION: u32 = 1;
/// Pulses are listed in the order they are applied.
pub const CONVENTION: &str = "application_order";

/// An angle written with 17 significant digits.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(transparent)]
struct Angle(f64);

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let raw = RawValue::from_string(format!("{:.16e}", self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PulseRecord {
    kind: PulseKind,
    theta: Angle,
    phi: Angle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceFile {
    pub version: u32,
    pub n: usize,
    pub convention: String,
    pub pulses: Vec<Pulse>,
    pub meta: BTreeMap<String, Value>,
}

#[derive(Serialize, Deserialize)]
struct RawFile {
    version: u32,
    n: usize,
    convention: String,
    pulses: Vec<PulseRecord>,
    #[serde(default)]
    meta: BTreeMap<String, Value>,
}

impl SequenceFile {
    pub fn from_sequence(seq: &PulseSequence, meta: BTreeMap<String, Value>) -> Self {
        let mut meta = meta;
        if !seq.meta.construction.is_empty() {
            meta.entry("construction".into()).or_insert_with(|| Value::String(seq.meta.construction.clone()));
        }
        Self { version: FORMAT_VERSION, n: seq.meta.n, convention: CONVENTION.into(), pulses: seq.pulses.clone(), meta }
    }

    pub fn to_sequence(&self) -> PulseSequence {
        let construction = self.meta.get("construction").and_then(Value::as_str).unwrap_or("file");
        PulseSequence::from_pulses(self.n, construction, self.pulses.clone())
    }

    pub fn to_json(&self) -> String {
        let raw = RawFile {
            version: self.version,
            n: self.n,
            convention: self.convention.clone(),
            pulses: self
                .pulses
                .iter()
                .map(|p| PulseRecord { kind: p.kind, theta: Angle(p.theta), phi: Angle(p.phi) })
                .collect(),
            meta: self.meta.clone(),
        };
        let mut s = serde_json::to_string_pretty(&raw).expect("sequence file serializes");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if raw.version != FORMAT_VERSION {
            return Err(Error::Parse(format!("field `version`: unsupported version {}", raw.version)));
        }
        if raw.convention != CONVENTION {
            return Err(Error::Parse(format!("field `convention`: expected \"{CONVENTION}\", got \"{}\"", raw.convention)));
        }
        let pulses = raw
            .pulses
            .iter()
            .enumerate()
            .map(|(i, r)| {
                Pulse::new(r.kind, r.theta.0, r.phi.0).map_err(|e| Error::Parse(format!("field `pulses[{i}]`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { version: raw.version, n: raw.n, convention: raw.convention, pulses, meta: raw.meta })
    }
}

/// Reads a `d×d` matrix written as rows of `[re, im]` pairs.
pub fn parse_target(text: &str) -> Result<DMatrix<C64>> {
    let rows: Vec<Vec<[f64; 2]>> = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let d = rows.len();
    if d == 0 {
        return Err(Error::Parse("target matrix is empty".into()));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != d {
            return Err(Error::Parse(format!("target row {i} has {} entries, expected {d}", r.len())));
        }
    }
    Ok(DMatrix::from_fn(d, d, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

pub fn target_to_json(m: &DMatrix<C64>) -> String {
    let rows: Vec<Vec<[f64; 2]>> =
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect();
    serde_json::to_string(&rows).expect("matrix serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_file() {
        let f = SequenceFile::from_sequence(&PulseSequence::new(3, ""), BTreeMap::new());
        let back = SequenceFile::parse(&f.to_json()).unwrap();
        assert_eq!(back, f);
        assert!(back.pulses.is_empty());
    }

    #[test]
    fn digits_written() {
        let seq = PulseSequence::from_pulses(2, "x", vec![Pulse::sideband(1.0 / 3.0, 0.1)]);
        let s = SequenceFile::from_sequence(&seq, BTreeMap::new()).to_json();
        assert!(s.contains("3.3333333333333331e-1"), "{s}");
    }

    #[test]
    fn diagnostics_name_the_field() {
        let bad = r#"{"version": 1, "n": 2, "convention": "application_order", "pulses": [{"kind": "blue", "theta": 1, "phi": 0}]}"#;
        let e = SequenceFile::parse(bad).unwrap_err().to_string();
        assert!(e.contains("line") && e.contains("blue"), "{e}");
        let bad = r#"{"version": 2, "n": 2, "convention": "application_order", "pulses": []}"#;
        assert!(SequenceFile::parse(bad).unwrap_err().to_string().contains("version"));
        let bad = r#"{"version": 1, "n": 2, "convention": "operator_order", "pulses": []}"#;
        assert!(SequenceFile::parse(bad).unwrap_err().to_string().contains("convention"));
        let bad = r#"{"version": 1, "n": 2, "convention": "application_order", "pulses": [{"kind": "carrier", "phi": 0}]}"#;
        assert!(SequenceFile::parse(bad).unwrap_err().to_string().contains("theta"));
    }

    #[test]
    fn target_roundtrip() {
        let m = DMatrix::from_fn(3, 3, |i, j| C64::new(i as f64 * 0.1, j as f64 - 0.3));
        assert_eq!(parse_target(&target_to_json(&m)).unwrap(), m);
        assert!(parse_target("[[[1,0],[0,0]],[[0,0]]]").is_err());
        assert!(parse_target("[]").is_err());
    }

    proptest! {
        #[test]
        fn roundtrip_is_lossless(raw in proptest::collection::vec((any::<bool>(), -20.0f64..20.0, -3.2f64..3.2), 0..20)) {
            let pulses: Vec<Pulse> = raw
                .iter()
                .map(|&(c, t, p)| if c { Pulse::carrier(t, p) } else { Pulse::sideband(t, p) })
                .collect();
            let f = SequenceFile::from_sequence(&PulseSequence::from_pulses(4, "prop", pulses), BTreeMap::new());
            let text = f.to_json();
            let back = SequenceFile::parse(&text).unwrap();
            prop_assert_eq!(&back, &f);
            prop_assert_eq!(back.to_json(), text);
        }
    }
}
