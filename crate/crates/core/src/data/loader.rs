//! CSV loading against a column schema.
//!
//! A schema file has one line per CSV column, `<name> <kind> [levels]`, where
//! `kind` is `numeric`, `ordinal` or `nominal` and `levels` is a
//! comma-separated list. The last line describes the class column and has
//! kind `label`. Blank lines and lines starting with `#` are ignored.
//!
//! Ordinal and nominal cells are encoded as their 0-based level index.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AttributeBounds, ClassId, DataError, Dataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Ordinal,
    Nominal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<ColumnSpec>,
    pub label: String,
    /// Class names in id order. Empty means: sorted distinct labels seen.
    pub class_levels: Vec<String>,
}

impl Schema {
    pub fn parse(text: &str) -> Result<Self, DataError> {
        let lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .collect();
        let Some((&(label_line, label_text), attrs)) = lines.split_last() else {
            return Err(DataError::Schema("schema is empty".into()));
        };
        if attrs.is_empty() {
            return Err(DataError::Schema("schema declares no attributes".into()));
        }
        let split_line = |line: usize, text: &str| -> Result<(String, String, Vec<String>), DataError> {
            let mut parts = text.split_whitespace();
            let name = parts.next().unwrap_or_default().to_string();
            let kind = parts
                .next()
                .ok_or_else(|| DataError::Schema(format!("line {line}: missing column kind")))?
                .to_ascii_lowercase();
            let levels = match parts.next() {
                Some(l) => l.split(',').map(|s| s.trim().to_string()).collect(),
                None => Vec::new(),
            };
            if parts.next().is_some() {
                return Err(DataError::Schema(format!(
                    "line {line}: expected `<name> <kind> [levels]`"
                )));
            }
            Ok((name, kind, levels))
        };

        let mut columns = Vec::with_capacity(attrs.len());
        for &(line, text) in attrs {
            let (name, kind, levels) = split_line(line, text)?;
            let kind = match kind.as_str() {
                "numeric" => ColumnKind::Numeric,
                "ordinal" => ColumnKind::Ordinal,
                "nominal" => ColumnKind::Nominal,
                "label" => {
                    return Err(DataError::Schema(format!(
                        "line {line}: only the last column may be the label"
                    )))
                }
                other => {
                    return Err(DataError::Schema(format!(
                        "line {line}: unknown column kind `{other}`"
                    )))
                }
            };
            if kind == ColumnKind::Numeric && !levels.is_empty() {
                return Err(DataError::Schema(format!(
                    "line {line}: numeric column `{name}` cannot declare levels"
                )));
            }
            if kind != ColumnKind::Numeric && levels.is_empty() {
                return Err(DataError::Schema(format!(
                    "line {line}: column `{name}` needs its levels"
                )));
            }
            columns.push(ColumnSpec { name, kind, levels });
        }
        let (label, kind, class_levels) = split_line(label_line, label_text)?;
        if kind != "label" {
            return Err(DataError::Schema(format!(
                "line {label_line}: last column must have kind `label`"
            )));
        }
        let distinct: BTreeSet<&String> = class_levels.iter().collect();
        if distinct.len() != class_levels.len() {
            return Err(DataError::Schema("duplicate class level".into()));
        }
        Ok(Self {
            columns,
            label,
            class_levels,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, DataError> {
        Self::parse(&read_to_string(path)?)
    }

    pub fn n_attributes(&self) -> usize {
        self.columns.len()
    }
}

fn read_to_string(path: &Path) -> Result<String, DataError> {
    fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Loads `path` with the schema stored next to it (same stem, `.schema`).
pub fn load_csv_with_schema_file(path: &Path) -> Result<(Dataset, Schema), DataError> {
    let schema = Schema::from_file(&path.with_extension("schema"))?;
    let data = load_csv(path, &schema)?;
    Ok((data, schema))
}

/// Parses a CSV with a header row into a [`Dataset`].
///
/// The header must list the schema's columns in order with the label last.
/// Bounds are the observed per-column (min, max).
pub fn load_csv(path: &Path, schema: &Schema) -> Result<Dataset, DataError> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    let text = read_to_string(path)?;
    parse_csv(&name, &text, schema)
}

pub(crate) fn parse_csv(name: &str, text: &str, schema: &Schema) -> Result<Dataset, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| DataError::Parse {
            line: 1,
            column: String::new(),
            message: e.to_string(),
        })?
        .clone();
    let d = schema.n_attributes();
    if header.len() != d + 1 {
        return Err(DataError::Schema(format!(
            "header has {} columns, schema has {}",
            header.len(),
            d + 1
        )));
    }
    let expected = schema
        .columns
        .iter()
        .map(|c| c.name.as_str())
        .chain([schema.label.as_str()]);
    for (got, want) in header.iter().zip(expected) {
        if got != want {
            return Err(DataError::Schema(format!(
                "header column `{got}` does not match schema column `{want}`"
            )));
        }
    }

    let mut records = Vec::new();
    let mut raw_labels = Vec::new();
    for result in reader.records() {
        let row = result.map_err(|e| DataError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            column: String::new(),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != d + 1 {
            return Err(DataError::Parse {
                line,
                column: String::new(),
                message: format!("expected {} fields, found {}", d + 1, row.len()),
            });
        }
        let mut values = Vec::with_capacity(d);
        for (spec, cell) in schema.columns.iter().zip(row.iter()) {
            let fail = |message: String| DataError::Parse {
                line,
                column: spec.name.clone(),
                message,
            };
            let v = match spec.kind {
                ColumnKind::Numeric => {
                    let v: f64 = cell
                        .parse()
                        .map_err(|_| fail(format!("`{cell}` is not a number")))?;
                    if !v.is_finite() {
                        return Err(fail(format!("`{cell}` is not finite")));
                    }
                    v
                }
                ColumnKind::Ordinal | ColumnKind::Nominal => spec
                    .levels
                    .iter()
                    .position(|l| l == cell)
                    .ok_or_else(|| fail(format!("`{cell}` is not a declared level")))?
                    as f64,
            };
            values.push(v);
        }
        records.push(values);
        raw_labels.push((line, row[d].to_string()));
    }
    if records.is_empty() {
        return Err(DataError::Empty(format!("`{name}` has no data rows")));
    }

    let classes: Vec<String> = if schema.class_levels.is_empty() {
        raw_labels
            .iter()
            .map(|(_, l)| l.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    } else {
        schema.class_levels.clone()
    };
    let labels = raw_labels
        .iter()
        .map(|(line, l)| {
            classes
                .iter()
                .position(|c| c == l)
                .map(|i| ClassId(i as u32))
                .ok_or_else(|| DataError::Parse {
                    line: *line,
                    column: schema.label.clone(),
                    message: format!("`{l}` is not a declared class"),
                })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let bounds = AttributeBounds::of_columns(&records)?;

    Dataset::new(
        name,
        schema.columns.iter().map(|c| c.name.clone()).collect(),
        classes,
        records,
        labels,
        bounds,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCHEMA: &str = "\
# toy
x numeric
size ordinal small,medium,large
class label no,yes
";

    fn schema() -> Schema {
        Schema::parse(SCHEMA).unwrap()
    }

    #[test]
    fn parses_schema() {
        let s = schema();
        assert_eq!(s.n_attributes(), 2);
        assert_eq!(s.columns[1].kind, ColumnKind::Ordinal);
        assert_eq!(s.class_levels, vec!["no", "yes"]);
    }

    #[test]
    fn schema_errors() {
        assert!(Schema::parse("").is_err());
        assert!(Schema::parse("class label a,b").is_err());
        assert!(Schema::parse("x numeric\nclass numeric").is_err());
        assert!(Schema::parse("x weird\nclass label").is_err());
        assert!(Schema::parse("x ordinal\nclass label").is_err());
        assert!(Schema::parse("x numeric\nclass label a,a").is_err());
    }

    #[test]
    fn loads_and_encodes() {
        let d = parse_csv(
            "toy",
            "x,size,class\n1.5,small,yes\n-2,large,no\n0,medium,yes\n",
            &schema(),
        )
        .unwrap();
        assert_eq!(d.records()[1], vec![-2.0, 2.0]);
        assert_eq!(d.labels(), &[ClassId(1), ClassId(0), ClassId(1)]);
        assert_eq!(d.bounds()[0].lower(), -2.0);
        assert_eq!(d.bounds()[0].upper(), 1.5);
        assert_eq!(d.bounds()[1].upper(), 2.0);
    }

    #[test]
    fn single_row_gives_degenerate_bounds() {
        let d = parse_csv("toy", "x,size,class\n1,medium,yes\n", &schema()).unwrap();
        assert!(d.bounds().iter().all(|b| b.width() == 0.0));
    }

    #[test]
    fn errors_name_line_and_column() {
        let err = parse_csv("toy", "x,size,class\n1,small,yes\nabc,small,no\n", &schema())
            .unwrap_err();
        match err {
            DataError::Parse { line, column, .. } => {
                assert_eq!(line, 3);
                assert_eq!(column, "x");
            }
            other => panic!("unexpected {other:?}"),
        }
        let err = parse_csv("toy", "x,size,class\n1,tiny,yes\n", &schema()).unwrap_err();
        assert!(err.to_string().contains("size"));
        let err = parse_csv("toy", "x,size,class\n1,small,maybe\n", &schema()).unwrap_err();
        assert!(err.to_string().contains("class"));
    }

    #[test]
    fn empty_and_mismatched_inputs_fail() {
        assert!(matches!(
            parse_csv("toy", "x,size,class\n", &schema()),
            Err(DataError::Empty(_))
        ));
        assert!(matches!(
            parse_csv("toy", "x,class\n1,yes\n", &schema()),
            Err(DataError::Schema(_))
        ));
        assert!(matches!(
            parse_csv("toy", "y,size,class\n1,small,yes\n", &schema()),
            Err(DataError::Schema(_))
        ));
    }

    #[test]
    fn infers_classes_when_undeclared() {
        let s = Schema::parse("x numeric\nc label").unwrap();
        let d = parse_csv("t", "x,c\n1,b\n2,a\n", &s).unwrap();
        assert_eq!(d.classes(), &["a".to_string(), "b".to_string()]);
        assert_eq!(d.labels(), &[ClassId(1), ClassId(0)]);
    }
}
