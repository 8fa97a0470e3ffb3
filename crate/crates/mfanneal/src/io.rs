//! Instance documents, solver outcome JSON and the per-run CSV tables.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use mfanneal_core::{
    Coupling, FlowTrace, IsingError, IsingInstance, MagnetizationSample, SolveOutcome,
    SpectrumPoint,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed instance document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{element}: {message}")]
    Invalid { element: String, message: String },
    #[error(transparent)]
    Stream(#[from] io::Error),
}

impl IoError {
    fn invalid(element: impl Into<String>, message: impl Into<String>) -> Self {
        IoError::Invalid {
            element: element.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CouplingDoc {
    i: usize,
    j: usize,
    value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    n: usize,
    z: usize,
    fields: Vec<f64>,
    couplings: Vec<CouplingDoc>,
}

pub fn read_instance(bytes: &[u8]) -> Result<IsingInstance, IoError> {
    let doc: InstanceDoc = serde_json::from_slice(bytes)?;
    if doc.n == 0 {
        return Err(IoError::invalid("n", "must be at least 1"));
    }
    if doc.fields.len() != doc.n {
        return Err(IoError::invalid(
            "fields",
            format!("expected {} entries, found {}", doc.n, doc.fields.len()),
        ));
    }
    let mut seen = BTreeSet::new();
    for (k, c) in doc.couplings.iter().enumerate() {
        let element = format!("couplings[{k}]");
        if c.i == c.j {
            return Err(IoError::invalid(
                element,
                format!("self-coupling at site {}", c.i),
            ));
        }
        if c.i > c.j {
            return Err(IoError::invalid(
                element,
                format!("pair ({}, {}) must be written with i < j", c.i, c.j),
            ));
        }
        if c.j >= doc.n {
            return Err(IoError::invalid(
                element,
                format!("site {} out of range for n = {}", c.j, doc.n),
            ));
        }
        if !seen.insert((c.i, c.j)) {
            return Err(IoError::invalid(
                element,
                format!("pair ({}, {}) listed twice", c.i, c.j),
            ));
        }
    }
    let couplings = doc
        .couplings
        .iter()
        .map(|c| Coupling {
            i: c.i,
            j: c.j,
            value: c.value,
        })
        .collect();
    IsingInstance::new(doc.n, doc.z, doc.fields, couplings).map_err(|e| match e {
        IsingError::NonFinite { what, index } => {
            let list = if what == "field" {
                "fields"
            } else {
                "couplings"
            };
            IoError::invalid(format!("{list}[{index}]"), "value must be finite")
        }
        IsingError::CoordinationExceeded { .. } => IoError::invalid("z", e.to_string()),
        IsingError::ZeroCoordination => IoError::invalid("z", "must be at least 1"),
        other => IoError::invalid("instance", other.to_string()),
    })
}

/// Pretty-printed JSON; floats use the shortest representation that reads
/// back to the same value.
pub fn write_instance(instance: &IsingInstance) -> String {
    let doc = InstanceDoc {
        n: instance.n(),
        z: instance.z(),
        fields: instance.fields().to_vec(),
        couplings: instance
            .couplings()
            .iter()
            .map(|c| CouplingDoc {
                i: c.i,
                j: c.j,
                value: c.value,
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("instance serializes");
    text.push('\n');
    text
}

/// Reads an instance from `path`, or from standard input when `path` is `-`.
pub fn load_instance(path: &Path) -> Result<IsingInstance, IoError> {
    let bytes = if path.as_os_str() == "-" {
        let mut buf = Vec::new();
        io::stdin().read_to_end(&mut buf)?;
        buf
    } else {
        fs::read(path).map_err(|source| IoError::File {
            path: path.to_path_buf(),
            source,
        })?
    };
    read_instance(&bytes)
}

/// Writes to `path`, or to standard output when `path` is `None` or `-`.
pub fn emit(path: Option<&Path>, contents: &str) -> Result<(), IoError> {
    match path {
        Some(p) if p.as_os_str() != "-" => fs::write(p, contents).map_err(|source| IoError::File {
            path: p.to_path_buf(),
            source,
        }),
        _ => {
            let mut out = io::stdout().lock();
            out.write_all(contents.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDoc {
    pub status: String,
    pub s_sing: Option<f64>,
    pub e0: Option<f64>,
    pub spins: Option<Vec<f64>>,
    pub steps: usize,
}

impl From<&SolveOutcome> for OutcomeDoc {
    fn from(outcome: &SolveOutcome) -> Self {
        OutcomeDoc {
            status: outcome.status().to_string(),
            s_sing: outcome.s_sing(),
            e0: outcome.e0(),
            spins: outcome.spins().map(|s| s.values()),
            steps: outcome.trace().steps(),
        }
    }
}

pub fn outcome_json(outcome: &SolveOutcome) -> String {
    let mut text =
        serde_json::to_string_pretty(&OutcomeDoc::from(outcome)).expect("outcome serializes");
    text.push('\n');
    text
}

/// 17 significant digits in scientific notation.
fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn trace_csv(trace: &FlowTrace, n: usize) -> String {
    let mut out = String::from("s");
    for mu in 0..n {
        let _ = write!(out, ",sz_{mu}");
    }
    out.push_str(",e_mf,det_sign,rcond\n");
    for sample in &trace.samples {
        out.push_str(&sci(sample.state.s));
        for v in &sample.state.sz {
            out.push(',');
            out.push_str(&sci(*v));
        }
        let d = &sample.diagnostics;
        let _ = writeln!(out, ",{},{},{}", sci(d.e_mf), d.det_sign, sci(d.rcond));
    }
    out
}

pub fn gap_csv(points: &[SpectrumPoint]) -> String {
    let mut out = String::from("s,e0,e1,gap\n");
    for p in points {
        let _ = writeln!(out, "{},{},{},{}", p.s, p.e0, p.e1, p.gap);
    }
    out
}

pub fn magnetization_csv(samples: &[MagnetizationSample], n: usize) -> String {
    let mut out = String::from("s");
    for mu in 0..n {
        let _ = write!(out, ",m_{mu}");
    }
    out.push_str(",degenerate_flag\n");
    for sample in samples {
        let _ = write!(out, "{}", sample.s);
        for m in &sample.m {
            let _ = write!(out, ",{m}");
        }
        let _ = writeln!(out, ",{}", u8::from(sample.degenerate));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document() {
        let inst = read_instance(br#"{"n":1,"z":1,"fields":[0.5],"couplings":[]}"#).unwrap();
        assert_eq!(inst.n(), 1);
        assert_eq!(inst.fields(), &[0.5]);
    }

    #[test]
    fn errors_name_the_element() {
        let cases = [
            (
                r#"{"n":2,"z":1,"fields":[0,0],"couplings":[{"i":1,"j":1,"value":1}]}"#,
                "couplings[0]",
            ),
            (
                r#"{"n":2,"z":1,"fields":[0,0],"couplings":[{"i":0,"j":1,"value":1},{"i":1,"j":0,"value":1}]}"#,
                "couplings[1]",
            ),
            (
                r#"{"n":2,"z":1,"fields":[0,0],"couplings":[{"i":0,"j":1,"value":1},{"i":0,"j":1,"value":2}]}"#,
                "couplings[1]",
            ),
            (
                r#"{"n":2,"z":1,"fields":[0,0],"couplings":[{"i":0,"j":2,"value":1}]}"#,
                "couplings[0]",
            ),
            (r#"{"n":2,"z":1,"fields":[0],"couplings":[]}"#, "fields"),
            (r#"{"n":2,"z":0,"fields":[0,0],"couplings":[]}"#, "z"),
        ];
        for (doc, element) in cases {
            let err = read_instance(doc.as_bytes()).unwrap_err();
            assert!(err.to_string().starts_with(element), "{err}");
        }
        assert!(matches!(
            read_instance(br#"{"n":1,"z":1,"fields":[0.5]}"#),
            Err(IoError::Json(_))
        ));
        assert!(matches!(
            read_instance(br#"{"n":1,"z":1,"fields":[0.5],"couplings":[],"extra":1}"#),
            Err(IoError::Json(_))
        ));
    }

    #[test]
    fn trace_header() {
        let csv = trace_csv(&FlowTrace::default(), 3);
        assert_eq!(csv, "s,sz_0,sz_1,sz_2,e_mf,det_sign,rcond\n");
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(sci(0.1), "1.0000000000000001e-1");
        assert_eq!(sci(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
