//! JSON model files.
//!
//! ```text
//! { "geometry": { "left": [0.0, 120.0], "right": [120.0, 240.0] },
//!   "blocks": [ { "measure": "3/32", "left": ["-", "D"], "right": ["U", "D"] } ] }
//! ```
//!
//! Angles are degrees, measures exact `num/den` strings, outcomes `U`, `D`
//! or `-` (no show).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ExperimentGeometry;
use crate::model::{Block, Outcome, PrismModel, ResponseFunction};
use crate::rational;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryFile {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockFile {
    pub measure: String,
    pub left: Vec<String>,
    pub right: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub geometry: GeometryFile,
    pub blocks: Vec<BlockFile>,
}

impl From<&PrismModel> for ModelFile {
    fn from(model: &PrismModel) -> Self {
        let codes = |v: &[Outcome]| v.iter().map(|o| o.code().to_string()).collect();
        ModelFile {
            geometry: GeometryFile {
                left: model.geometry().left_degrees(),
                right: model.geometry().right_degrees(),
            },
            blocks: model
                .blocks()
                .iter()
                .map(|b| BlockFile {
                    measure: rational::format(&b.measure),
                    left: codes(&b.response.left),
                    right: codes(&b.response.right),
                })
                .collect(),
        }
    }
}

impl TryFrom<ModelFile> for PrismModel {
    type Error = Error;

    fn try_from(file: ModelFile) -> Result<Self> {
        let geometry = ExperimentGeometry::from_degrees(&file.geometry.left, &file.geometry.right)
            .map_err(|e| Error::Parse(format!("geometry: {e}")))?;
        let blocks = file
            .blocks
            .into_iter()
            .enumerate()
            .map(|(k, b)| {
                let measure = rational::parse(&b.measure)
                    .map_err(|e| Error::Parse(format!("blocks[{k}].measure: {e}")))?;
                let outcomes = |side: &str, v: &[String]| {
                    v.iter()
                        .enumerate()
                        .map(|(i, s)| {
                            let mut chars = s.chars();
                            match (chars.next().and_then(Outcome::from_code), chars.next()) {
                                (Some(o), None) => Ok(o),
                                _ => Err(Error::Parse(format!("blocks[{k}].{side}[{i}]: bad outcome `{s}`"))),
                            }
                        })
                        .collect::<Result<Vec<_>>>()
                };
                let response = ResponseFunction::new(outcomes("left", &b.left)?, outcomes("right", &b.right)?);
                Ok(Block::new(measure, response))
            })
            .collect::<Result<Vec<_>>>()?;
        PrismModel::new(geometry, blocks)
    }
}

pub fn model_to_json(model: &PrismModel) -> String {
    let mut s = serde_json::to_string_pretty(&ModelFile::from(model)).expect("serializable");
    s.push('\n');
    s
}

pub fn model_from_json(text: &str) -> Result<PrismModel> {
    let mut de = serde_json::Deserializer::from_str(text);
    let file: ModelFile = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." || inner.is_syntax() || inner.is_eof() {
            Error::Json(inner)
        } else {
            Error::Parse(format!("{path}: {inner}"))
        }
    })?;
    de.end()?;
    PrismModel::try_from(file)
}

pub fn read_model(path: impl AsRef<Path>) -> Result<PrismModel> {
    model_from_json(&std::fs::read_to_string(path)?)
}

pub fn write_model(path: impl AsRef<Path>, model: &PrismModel) -> Result<()> {
    std::fs::write(path, model_to_json(model))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::canonical_2x2_model;

    #[test]
    fn canonical_form_is_stable() {
        let text = model_to_json(&canonical_2x2_model());
        let parsed = model_from_json(&text).unwrap();
        assert_eq!(parsed, canonical_2x2_model());
        assert_eq!(model_to_json(&parsed), text);
    }

    #[test]
    fn errors_name_the_field() {
        let bad_measure = r#"{"geometry":{"left":[0],"right":[0]},
            "blocks":[{"measure":"x/2","left":["U"],"right":["D"]}]}"#;
        let msg = model_from_json(bad_measure).unwrap_err().to_string();
        assert!(msg.contains("blocks[0].measure"), "{msg}");

        let bad_outcome = r#"{"geometry":{"left":[0],"right":[0]},
            "blocks":[{"measure":"1/1","left":["Q"],"right":["D"]}]}"#;
        let msg = model_from_json(bad_outcome).unwrap_err().to_string();
        assert!(msg.contains("blocks[0].left[0]"), "{msg}");

        let missing = r#"{"geometry":{"left":[0],"right":[0]},"blocks":[{"left":["U"],"right":["D"]}]}"#;
        let msg = model_from_json(missing).unwrap_err().to_string();
        assert!(msg.contains("measure") && msg.contains("line"), "{msg}");
    }

    #[test]
    fn measures_must_sum_to_one() {
        let text = r#"{"geometry":{"left":[0],"right":[0]},
            "blocks":[{"measure":"1/2","left":["U"],"right":["D"]}]}"#;
        assert!(matches!(model_from_json(text), Err(Error::MeasureSum { .. })));
    }
}
