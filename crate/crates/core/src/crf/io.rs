//! Text model format.
//!
//! ```text
//! CMPOS-MODEL v1
//! <tagset>
//! <label> <label> ...
//! M <key> <value>          metadata, sorted by key
//! S <label> <weight>       one per label
//! T <from> <to> <weight>   one per label pair
//! E <feature> <label> <weight>
//! END <number of E lines>
//! ```
//!
//! Emission lines are sorted by feature, then label order, and only nonzero
//! weights are written. Weights carry 17 significant digits, which is enough
//! to read back the exact same `f64`.

use std::collections::BTreeMap;

use super::{CrfError, CrfModel, Weights};
use crate::corpus::TagsetKind;

pub const MODEL_HEADER: &str = "CMPOS-MODEL v1";

fn weight(w: f64) -> String {
    format!("{w:.16e}")
}

pub fn save_model(model: &CrfModel) -> String {
    let labels = model.labels();
    let n = labels.len();
    let w = model.weights();
    let mut out = String::new();
    out.push_str(MODEL_HEADER);
    out.push('\n');
    out.push_str(model.tagset().as_str());
    out.push('\n');
    out.push_str(&labels.join(" "));
    out.push('\n');
    for (k, v) in model.metadata() {
        out.push_str(&format!("M {k} {v}\n"));
    }
    for (y, label) in labels.iter().enumerate() {
        out.push_str(&format!("S {label} {}\n", weight(w.start[y])));
    }
    for (a, from) in labels.iter().enumerate() {
        for (b, to) in labels.iter().enumerate() {
            out.push_str(&format!("T {from} {to} {}\n", weight(w.transitions[a * n + b])));
        }
    }
    let mut emitted = 0usize;
    for (feature, row) in &w.emissions {
        for (label, &v) in labels.iter().zip(row) {
            if v != 0.0 {
                out.push_str(&format!("E {feature} {label} {}\n", weight(v)));
                emitted += 1;
            }
        }
    }
    out.push_str(&format!("END {emitted}\n"));
    out
}

struct Reader<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Reader<'a> {
    fn corrupt(&self, offset: usize, message: impl Into<String>) -> CrfError {
        CrfError::Corrupt {
            offset,
            message: message.into(),
        }
    }

    /// Next line and the byte offset where it starts. Every line must end in `\n`.
    fn line(&mut self) -> Result<(usize, &'a str), CrfError> {
        let start = self.pos;
        let rest = &self.text[start..];
        match rest.find('\n') {
            Some(end) => {
                self.pos = start + end + 1;
                Ok((start, &rest[..end]))
            }
            None => Err(self.corrupt(self.text.len(), "unexpected end of file")),
        }
    }

    fn peek_tag(&self) -> Option<&'a str> {
        self.text[self.pos..].split([' ', '\n']).next()
    }
}

fn parse_weight(r: &Reader<'_>, offset: usize, s: &str) -> Result<f64, CrfError> {
    match s.parse::<f64>() {
        Ok(w) if w.is_finite() => Ok(w),
        _ => Err(r.corrupt(offset, format!("bad weight {s:?}"))),
    }
}

pub fn load_model(text: &str) -> Result<CrfModel, CrfError> {
    let mut r = Reader { text, pos: 0 };
    let (_, header) = r.line().map_err(|_| CrfError::Version {
        found: text.lines().next().unwrap_or("").to_string(),
    })?;
    if header != MODEL_HEADER {
        return Err(CrfError::Version {
            found: header.to_string(),
        });
    }
    let (off, tagset) = r.line()?;
    let tagset: TagsetKind = tagset
        .parse()
        .map_err(|_| r.corrupt(off, format!("unknown tagset {tagset:?}")))?;
    let (off, label_line) = r.line()?;
    let labels: Vec<String> = label_line.split(' ').map(str::to_string).collect();
    let mut model = CrfModel::new(labels.clone())
        .map_err(|e| r.corrupt(off, e.to_string()))?
        .with_tagset(tagset);
    let n = labels.len();
    let index = |r: &Reader<'_>, off: usize, l: &str| {
        model
            .label_index(l)
            .ok_or_else(|| r.corrupt(off, format!("unknown label {l:?}")))
    };

    let mut metadata = BTreeMap::new();
    while r.peek_tag() == Some("M") {
        let (off, line) = r.line()?;
        let mut parts = line.splitn(3, ' ').skip(1);
        let (Some(k), Some(v)) = (parts.next(), parts.next()) else {
            return Err(r.corrupt(off, "metadata line needs a key and a value"));
        };
        metadata.insert(k.to_string(), v.to_string());
    }
    let mut weights = Weights::zeros(n);
    for y in 0..n {
        let (off, line) = r.line()?;
        let parts: Vec<&str> = line.split(' ').collect();
        let ["S", label, w] = parts[..] else {
            return Err(r.corrupt(off, "expected a start line"));
        };
        if index(&r, off, label)? != y {
            return Err(r.corrupt(off, "start lines out of label order"));
        }
        weights.start[y] = parse_weight(&r, off, w)?;
    }
    for i in 0..n * n {
        let (off, line) = r.line()?;
        let parts: Vec<&str> = line.split(' ').collect();
        let ["T", from, to, w] = parts[..] else {
            return Err(r.corrupt(off, "expected a transition line"));
        };
        if index(&r, off, from)? * n + index(&r, off, to)? != i {
            return Err(r.corrupt(off, "transition lines out of label order"));
        }
        weights.transitions[i] = parse_weight(&r, off, w)?;
    }
    let mut emitted = 0usize;
    let mut last: Option<(&str, usize)> = None;
    loop {
        let (off, line) = r.line()?;
        if let Some(count) = line.strip_prefix("END ") {
            let count: usize = count
                .parse()
                .map_err(|_| r.corrupt(off, "bad END count"))?;
            if count != emitted {
                return Err(r.corrupt(off, format!("END announces {count} emission lines, found {emitted}")));
            }
            if r.pos != text.len() {
                return Err(r.corrupt(r.pos, "trailing data after END"));
            }
            break;
        }
        let Some(body) = line.strip_prefix("E ") else {
            return Err(r.corrupt(off, "expected an emission line"));
        };
        // the feature may itself contain spaces; label and weight never do
        let mut parts = body.rsplitn(3, ' ');
        let (Some(w), Some(label), Some(feature)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(r.corrupt(off, "emission line needs feature, label and weight"));
        };
        let y = index(&r, off, label)?;
        if last.is_some_and(|prev| prev >= (feature, y)) {
            return Err(r.corrupt(off, "emission lines out of order"));
        }
        last = Some((feature, y));
        let w = parse_weight(&r, off, w)?;
        if w == 0.0 {
            return Err(r.corrupt(off, "zero emission weights are never written"));
        }
        weights
            .emissions
            .entry(feature.to_string())
            .or_insert_with(|| vec![0.0; n])[y] = w;
        emitted += 1;
    }
    model = CrfModel::from_parts(labels, tagset, weights, metadata);
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CrfModel {
        let mut m = CrfModel::new(["N_NN", "V_VM", "@"]).unwrap().with_tagset(TagsetKind::Coarse);
        m.set_emission("SUF3=ing", "V_VM", 1.0 / 3.0).unwrap();
        m.set_emission("CTX[0]=a b", "N_NN", -2.5e-17).unwrap();
        m.set_emission("NORM=aaa", "@", 7.0).unwrap();
        m.set_transition("N_NN", "V_VM", std::f64::consts::PI).unwrap();
        m.set_start("@", -0.1).unwrap();
        m.set_metadata("template_hash", "abc123");
        m
    }

    #[test]
    fn round_trip_is_exact() {
        let m = sample();
        let text = save_model(&m);
        assert!(text.starts_with("CMPOS-MODEL v1\ncoarse\nN_NN V_VM @\nM template_hash abc123\n"));
        let back = load_model(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(save_model(&back), text);
    }

    #[test]
    fn emissions_are_sorted() {
        let text = save_model(&sample());
        let feats: Vec<&str> = text.lines().filter(|l| l.starts_with("E ")).collect();
        assert_eq!(feats.len(), 3);
        let mut sorted = feats.clone();
        sorted.sort();
        assert_eq!(feats, sorted);
    }

    #[test]
    fn truncation_is_detected() {
        let text = save_model(&sample());
        for cut in [text.len() - 1, text.len() - 8, text.len() / 2, 20] {
            match load_model(&text[..cut]) {
                Err(CrfError::Corrupt { offset, .. }) => assert!(offset <= cut),
                other => panic!("cut at {cut}: {other:?}"),
            }
        }
    }

    #[test]
    fn version_is_checked() {
        let text = save_model(&sample()).replacen("v1", "v999", 1);
        assert_eq!(
            load_model(&text),
            Err(CrfError::Version {
                found: "CMPOS-MODEL v999".into()
            })
        );
        assert!(matches!(load_model(""), Err(CrfError::Version { .. })));
    }

    #[test]
    fn corrupt_weights_report_their_offset() {
        let text = save_model(&sample());
        let at = text.find("S N_NN").unwrap();
        let broken = text.replacen("S N_NN 0", "S N_NN x", 1);
        assert_eq!(
            load_model(&broken),
            Err(CrfError::Corrupt {
                offset: at,
                message: "bad weight \"x.0000000000000000e0\"".into()
            })
        );
    }
}
