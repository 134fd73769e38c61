//! Line-oriented CRP dumps.
//!
//! ```text
//! # puf-spectra crp params=<digest> seed=<seed> k=<k> fault=<spec|none> n_stages=<n>
//! <instance_id>,<challenge as 16 hex chars>,<response bits, bit 1 first>
//! ```
//!
//! Lines starting with `#` are comments; the `n_stages=` key is honored when
//! present and defaults to 64 otherwise, so hand-written or hardware dumps need
//! no header. Every instance must answer the same challenges in the same order.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sim::{Challenge, ChallengeSet, DapufParams, FaultSpec, Response, ResponseTable, RESPONSE_BITS};

/// Provenance recorded in a dump header.
#[derive(Debug, Clone, PartialEq)]
pub struct CrpHeader {
    pub params_digest: String,
    pub seed: u64,
    pub k: usize,
    pub fault: Option<FaultSpec>,
    pub n_stages: usize,
}

impl CrpHeader {
    pub fn new(params: &DapufParams, k: usize, fault: Option<&FaultSpec>) -> Self {
        CrpHeader {
            params_digest: params.digest(),
            seed: params.seed,
            k,
            fault: fault.cloned(),
            n_stages: params.n_stages,
        }
    }

    fn line(&self) -> String {
        let fault = self.fault.as_ref().map_or("none".to_string(), |f| f.to_string());
        format!(
            "# puf-spectra crp params={} seed={} k={} fault={} n_stages={}",
            self.params_digest, self.seed, self.k, fault, self.n_stages
        )
    }
}

fn response_str(r: Response) -> String {
    (1..=RESPONSE_BITS).map(|b| if r.bit(b) { '1' } else { '0' }).collect()
}

/// Renders a table with its header; `extra_comments` are written as `# ` lines after the header.
pub fn write_crp(table: &ResponseTable, header: &CrpHeader, extra_comments: &[String]) -> String {
    let n = table.challenges().len();
    let mut out = String::with_capacity(table.instance_count() * n * 24 + 256);
    out.push_str(&header.line());
    out.push('\n');
    for c in extra_comments {
        writeln!(out, "# {c}").expect("write to string");
    }
    for (i, &id) in table.instance_ids().iter().enumerate() {
        for (j, ch) in table.challenges().challenges().iter().enumerate() {
            writeln!(out, "{id},{:016x},{}", ch.bits(), response_str(table.response(i, j))).expect("write to string");
        }
    }
    out
}

/// A parsed dump: the response table plus whatever header was found.
#[derive(Debug, Clone, PartialEq)]
pub struct CrpFile {
    pub table: ResponseTable,
    /// The provenance header line, verbatim, when present.
    pub header_line: Option<String>,
}

/// Parses dump text; `path` is used only in error messages.
pub fn parse_crp(text: &str, path: &Path) -> Result<CrpFile> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut n_stages = 64usize;
    let mut header_line = None;
    let mut ids: Vec<u64> = Vec::new();
    let mut pos: HashMap<u64, usize> = HashMap::new();
    let mut challenges: Vec<Challenge> = Vec::new();
    let mut responses: Vec<Vec<Response>> = Vec::new();
    let mut seen_data = false;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if comment.trim_start().starts_with("puf-spectra crp") {
                if seen_data {
                    return Err(err(lineno, "header after data lines".into()));
                }
                for kv in comment.split_whitespace() {
                    if let Some(v) = kv.strip_prefix("n_stages=") {
                        n_stages = v
                            .parse()
                            .ok()
                            .filter(|n| (1..=64).contains(n))
                            .ok_or_else(|| err(lineno, format!("bad n_stages {v:?}")))?;
                    }
                }
                header_line = Some(line.to_string());
            }
            continue;
        }
        seen_data = true;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(err(lineno, format!("expected 3 comma-separated fields, got {}", fields.len())));
        }
        let id: u64 = fields[0]
            .parse()
            .map_err(|_| err(lineno, format!("bad instance id {:?}", fields[0])))?;
        if fields[1].len() != 16 {
            return Err(err(lineno, format!("challenge {:?} is not 16 hex characters", fields[1])));
        }
        let bits = u64::from_str_radix(fields[1], 16)
            .map_err(|_| err(lineno, format!("challenge {:?} is not hexadecimal", fields[1])))?;
        let challenge = Challenge::new(bits, n_stages).map_err(|e| err(lineno, e.to_string()))?;
        let resp = fields[2];
        if resp.len() != RESPONSE_BITS || !resp.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(err(lineno, format!("response {resp:?} is not {RESPONSE_BITS} bits")));
        }
        let value = resp
            .bytes()
            .enumerate()
            .fold(0u8, |acc, (b, c)| acc | (u8::from(c == b'1') << b));
        let response = Response::new(value).expect("4-bit value");

        let p = *pos.entry(id).or_insert_with(|| {
            ids.push(id);
            responses.push(Vec::new());
            ids.len() - 1
        });
        if p != ids.len() - 1 {
            return Err(err(lineno, format!("instance {id} lines are not contiguous")));
        }
        let j = responses[p].len();
        if p == 0 {
            challenges.push(challenge);
        } else if j >= challenges.len() {
            return Err(err(lineno, format!("instance {id} has more challenges than instance {}", ids[0])));
        } else if challenges[j] != challenge {
            return Err(err(
                lineno,
                format!("instance {id} challenge #{} differs from instance {}", j + 1, ids[0]),
            ));
        }
        responses[p].push(response);
    }

    if ids.is_empty() {
        return Err(err(text.lines().count().max(1), "no CRP lines".into()));
    }
    if let Some((p, r)) = responses.iter().enumerate().find(|(_, r)| r.len() != challenges.len()) {
        return Err(err(
            text.lines().count(),
            format!("instance {} has {} challenges, expected {}", ids[p], r.len(), challenges.len()),
        ));
    }
    let set = ChallengeSet::new(n_stages, challenges).map_err(|e| err(0, e.to_string()))?;
    let table = ResponseTable::new(ids, set, responses.into_iter().flatten().collect())?;
    Ok(CrpFile { table, header_line })
}

/// Reads and parses a dump from disk.
pub fn read_crp(path: &Path) -> Result<CrpFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_crp(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{collect_responses, generate_population};

    fn sample() -> (ResponseTable, CrpHeader) {
        let params = DapufParams::default();
        let pop = generate_population(&params, 3).unwrap();
        let cs = ChallengeSet::random(64, 5, 1).unwrap();
        (collect_responses(&pop, &cs, 3).unwrap(), CrpHeader::new(&params, 3, None))
    }

    #[test]
    fn round_trip() {
        let (table, header) = sample();
        let text = write_crp(&table, &header, &["hello".into()]);
        assert!(text.starts_with("# puf-spectra crp params="));
        assert_eq!(text.lines().count(), 2 + 15);
        let parsed = parse_crp(&text, Path::new("x.crp")).unwrap();
        assert_eq!(parsed.table, table);
        assert_eq!(parsed.header_line.as_deref(), text.lines().next());
    }

    #[test]
    fn headerless_input() {
        let text = "7,0000000000000001,1000\n7,00000000000000ff,0110\n9,0000000000000001,0001\n9,00000000000000ff,1111\n";
        let f = parse_crp(text, Path::new("h.crp")).unwrap();
        assert_eq!(f.table.instance_ids(), &[7, 9]);
        assert_eq!(f.table.response(0, 0).value(), 0b0001);
        assert_eq!(f.table.response(1, 0).value(), 0b1000);
        assert!(f.header_line.is_none());
    }

    fn line_of(text: &str) -> usize {
        match parse_crp(text, Path::new("bad.crp")) {
            Err(Error::Parse { line, .. }) => line,
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(line_of("# c\n0,0000000000000001,1000\n0,zz,1000\n"), 3);
        assert_eq!(line_of("0,0000000000000001,10\n"), 1);
        assert_eq!(line_of("0,0000000000000001,1000,1\n"), 1);
        assert_eq!(line_of("x,0000000000000001,1000\n"), 1);
        assert_eq!(line_of("0,0000000000000001,1000\n1,0000000000000002,1000\n"), 2);
        assert_eq!(line_of("0,0000000000000001,1000\n1,0000000000000001,1000\n0,0000000000000002,1000\n"), 3);
        assert_eq!(line_of("# puf-spectra crp n_stages=8\n0,0000000000000100,1000\n"), 2);
        assert_eq!(line_of(""), 1);
    }

    #[test]
    fn short_instance_rejected() {
        let text = "0,0000000000000001,1000\n0,0000000000000002,1000\n1,0000000000000001,1000\n";
        assert!(matches!(parse_crp(text, Path::new("s.crp")), Err(Error::Parse { line: 3, .. })));
    }
}
