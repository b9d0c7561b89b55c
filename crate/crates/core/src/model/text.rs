//! Plain-text model format.
//!
//! ```text
//! dapmlm-nb 1
//! attributes 2
//! tag noisy
//! epsilon 0.5
//! count_noise_scale 1
//! class 0 41.73
//! 5.01 0.35
//! 3.42 0.38
//! class 1 ...
//! ```
//!
//! Floats are written in shortest round-trip form, so loading restores every
//! parameter bit for bit.

use crate::data::ClassId;
use crate::dp::PrivacyBudget;

use super::{AttributeStats, ClassParams, ModelError, ModelTag, NbModel};

const MAGIC: &str = "dapmlm-nb";
const VERSION: u32 = 1;

pub fn to_text(model: &NbModel) -> String {
    let mut out = format!("{MAGIC} {VERSION}\nattributes {}\n", model.n_attributes());
    match model.tag() {
        ModelTag::Raw => out.push_str("tag raw\n"),
        ModelTag::Noisy {
            epsilon,
            count_noise_scale,
        } => out.push_str(&format!(
            "tag noisy\nepsilon {}\ncount_noise_scale {}\n",
            epsilon.epsilon(),
            count_noise_scale
        )),
    }
    for c in model.classes() {
        out.push_str(&format!("class {} {}\n", c.class.0, c.count));
        for s in &c.stats {
            out.push_str(&format!("{} {}\n", s.mean, s.std));
        }
    }
    out
}

struct Cursor<'a> {
    lines: std::vec::IntoIter<(usize, &'a str)>,
}

impl<'a> Cursor<'a> {
    /// Next non-empty line as whitespace-separated fields; line 0 means
    /// end of input.
    fn fields(&mut self, what: &str) -> Result<(usize, Vec<&'a str>), ModelError> {
        let (line, text) = self.lines.next().ok_or_else(|| ModelError::Parse {
            line: 0,
            message: format!("unexpected end of input, expected {what}"),
        })?;
        Ok((line, text.split_whitespace().collect()))
    }

    fn keyed(&mut self, key: &str) -> Result<(usize, Vec<&'a str>), ModelError> {
        let (line, fields) = self.fields(&format!("`{key}`"))?;
        if fields[0] != key {
            return Err(ModelError::Parse {
                line,
                message: format!("expected `{key}`, found `{}`", fields[0]),
            });
        }
        Ok((line, fields[1..].to_vec()))
    }
}

fn one<T: std::str::FromStr>(line: usize, fields: &[&str]) -> Result<T, ModelError> {
    match fields {
        [v] => v.parse().map_err(|_| ModelError::Parse {
            line,
            message: format!("cannot parse `{v}`"),
        }),
        _ => Err(ModelError::Parse {
            line,
            message: format!("expected one value, found {}", fields.len()),
        }),
    }
}

pub fn from_text(text: &str) -> Result<NbModel, ModelError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    let mut cur = Cursor {
        lines: lines.into_iter(),
    };
    let err = |line: usize, message: &str| ModelError::Parse {
        line,
        message: message.to_string(),
    };

    let (line, v) = cur.keyed(MAGIC)?;
    let version: u32 = one(line, &v)?;
    if version != VERSION {
        return Err(err(line, &format!("unsupported version {version}")));
    }
    let (line, v) = cur.keyed("attributes")?;
    let d: usize = one(line, &v)?;
    let (line, v) = cur.keyed("tag")?;
    let tag = match v.as_slice() {
        ["raw"] => ModelTag::Raw,
        ["noisy"] => {
            let (line, v) = cur.keyed("epsilon")?;
            let epsilon = PrivacyBudget::new(one(line, &v)?)?;
            let (line, v) = cur.keyed("count_noise_scale")?;
            ModelTag::Noisy {
                epsilon,
                count_noise_scale: one(line, &v)?,
            }
        }
        _ => return Err(err(line, "tag must be `raw` or `noisy`")),
    };

    let mut classes = Vec::new();
    while cur.lines.len() > 0 {
        let (line, v) = cur.keyed("class")?;
        let [id, count] = v.as_slice() else {
            return Err(err(line, "expected `class <id> <count>`"));
        };
        let class = ClassId(one(line, &[id])?);
        let count: f64 = one(line, &[count])?;
        let mut stats = Vec::with_capacity(d);
        for _ in 0..d {
            let (line, fields) = cur.fields("an attribute row")?;
            let [mean, std] = fields.as_slice() else {
                return Err(err(line, "expected `<mean> <std>`"));
            };
            stats.push(AttributeStats {
                mean: one(line, &[mean])?,
                std: one(line, &[std])?,
            });
        }
        classes.push(ClassParams {
            class,
            count,
            stats,
        });
    }
    NbModel::new(classes, d, tag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::AttributeBounds;
    use crate::dp::NoiseSource;
    use crate::model::{class_sensitivities, perturb_model, train};

    #[test]
    fn round_trip_is_bit_exact() {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![(i as f64).sin() * 3.1, (i as f64 * 0.7).cos() / 7.0])
            .collect();
        let labels: Vec<ClassId> = (0..30).map(|i| ClassId(i % 3)).collect();
        let raw = train(&rows, &labels).unwrap();
        assert_eq!(from_text(&to_text(&raw)).unwrap(), raw);

        let bounds = AttributeBounds::of_columns(&rows).unwrap();
        let sens = class_sensitivities(&raw, &bounds).unwrap();
        let noisy = perturb_model(
            &raw,
            &sens,
            PrivacyBudget::new(0.1).unwrap(),
            1.0,
            &mut NoiseSource::from_seed(8),
        )
        .unwrap();
        let back = from_text(&to_text(&noisy)).unwrap();
        assert_eq!(back, noisy);
        for (a, b) in back.classes().iter().zip(noisy.classes()) {
            assert_eq!(a.count.to_bits(), b.count.to_bits());
            for (x, y) in a.stats.iter().zip(&b.stats) {
                assert_eq!(x.mean.to_bits(), y.mean.to_bits());
                assert_eq!(x.std.to_bits(), y.std.to_bits());
            }
        }
    }

    #[test]
    fn rejects_malformed_documents() {
        assert!(from_text("").is_err());
        assert!(from_text("dapmlm-nb 2\nattributes 1\ntag raw\nclass 0 1\n0 1\n").is_err());
        assert!(from_text("dapmlm-nb 1\nattributes 1\ntag raw\nclass 0 1\n0\n").is_err());
        assert!(from_text("dapmlm-nb 1\nattributes 1\ntag raw\nclass 0 1\n").is_err());
        assert!(from_text("dapmlm-nb 1\nattributes 1\ntag odd\nclass 0 1\n0 1\n").is_err());
        assert!(from_text("dapmlm-nb 1\nattributes 1\ntag raw\nclass 0 1\n0 -1\n").is_err());
        assert!(from_text("dapmlm-nb 1\nattributes 1\ntag raw\nclass 0 1\n0 1\n").is_ok());
    }
}
