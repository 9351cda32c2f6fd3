//! Text form of cube pipelines.
//!
//! One op per line or `;`-separated:
//!
//! ```text
//! slice entity=Usain_Bolt
//! dice geo=China,Brazil time=2008
//! drillup time
//! drilldown geo
//! roll geo,time,entity
//! ```
//!
//! Whitespace-separated words after a `dim=value` token continue the value,
//! so `dice geo=Rio de Janeiro` names one place.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use super::{CubeError, CubeOp};
use crate::annotations::Dim;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("op {index}: {error}")]
pub struct PipelineError {
    pub index: usize,
    #[serde(serialize_with = "as_display")]
    pub error: CubeError,
}

fn as_display<S: serde::Serializer>(e: &CubeError, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(e)
}

fn parse_dim(s: &str) -> Result<Dim, CubeError> {
    s.parse()
        .map_err(|_| CubeError::Parse(format!("unknown dimension {s:?}")))
}

/// `dim=value` assignments; bare words extend the previous value.
fn assignments(words: &[&str]) -> Result<Vec<(Dim, String)>, CubeError> {
    let mut out: Vec<(Dim, String)> = Vec::new();
    for w in words {
        match w.split_once('=') {
            Some((d, v)) => out.push((parse_dim(d)?, v.to_string())),
            None => match out.last_mut() {
                Some((_, v)) => {
                    v.push(' ');
                    v.push_str(w);
                }
                None => return Err(CubeError::Parse(format!("expected dim=member, got {w:?}"))),
            },
        }
    }
    Ok(out)
}

fn parse_op(text: &str) -> Result<CubeOp, CubeError> {
    let words: Vec<&str> = text.split_whitespace().collect();
    let (name, args) = words.split_first().ok_or_else(|| CubeError::Parse("empty op".into()))?;
    let single_dim = || match args {
        [d] => parse_dim(d),
        _ => Err(CubeError::Parse(format!("{name} takes one dimension"))),
    };
    match name.to_ascii_lowercase().as_str() {
        "slice" => match assignments(args)?.as_slice() {
            [(dim, member)] => Ok(CubeOp::Slice {
                dim: *dim,
                member: member.trim().to_string(),
            }),
            _ => Err(CubeError::Parse("slice takes exactly one dim=member".into())),
        },
        "dice" => {
            let mut members: BTreeMap<Dim, Vec<String>> = BTreeMap::new();
            for (dim, value) in assignments(args)? {
                if members.contains_key(&dim) {
                    return Err(CubeError::Parse(format!("dimension {dim} given twice")));
                }
                let list = value
                    .split(',')
                    .map(|m| m.trim().to_string())
                    .filter(|m| !m.is_empty())
                    .collect();
                members.insert(dim, list);
            }
            if members.is_empty() {
                return Err(CubeError::EmptyDice);
            }
            Ok(CubeOp::Dice { members })
        }
        "drillup" | "drill-up" => Ok(CubeOp::DrillUp { dim: single_dim()? }),
        "drilldown" | "drill-down" => Ok(CubeOp::DrillDown { dim: single_dim()? }),
        "roll" => {
            let joined = args.join("");
            let dims = joined.split(',').map(parse_dim).collect::<Result<Vec<_>, _>>()?;
            let order: [Dim; 3] = dims.try_into().map_err(|_| CubeError::BadRoll(joined.clone()))?;
            Ok(CubeOp::Roll { order })
        }
        other => Err(CubeError::Parse(format!("unknown op {other:?}"))),
    }
}

/// Parses a pipeline; blank lines and `#` comments are ignored.
pub fn parse_pipeline(text: &str) -> Result<Vec<CubeOp>, PipelineError> {
    text.split(['\n', ';'])
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .enumerate()
        .map(|(index, l)| parse_op(l).map_err(|error| PipelineError { index, error }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_each_op() {
        let ops = parse_pipeline(
            "slice entity=Usain_Bolt\ndice geo=China,Brazil time=2008\n# comment\n\ndrillup time; drilldown geo\nroll geo, time, entity",
        )
        .unwrap();
        assert_eq!(
            ops,
            vec![
                CubeOp::Slice {
                    dim: Dim::Entity,
                    member: "Usain_Bolt".into()
                },
                CubeOp::Dice {
                    members: BTreeMap::from([
                        (Dim::Time, vec!["2008".into()]),
                        (Dim::Geo, vec!["China".into(), "Brazil".into()]),
                    ])
                },
                CubeOp::DrillUp { dim: Dim::Time },
                CubeOp::DrillDown { dim: Dim::Geo },
                CubeOp::Roll {
                    order: [Dim::Geo, Dim::Time, Dim::Entity]
                },
            ]
        );
    }

    #[test]
    fn member_names_may_contain_spaces() {
        let ops = parse_pipeline("dice geo=Rio de Janeiro,São Paulo").unwrap();
        assert_eq!(
            ops[0],
            CubeOp::Dice {
                members: BTreeMap::from([(Dim::Geo, vec!["Rio de Janeiro".into(), "São Paulo".into()])])
            }
        );
    }

    #[test]
    fn display_round_trips() {
        let text =
            "slice entity=Usain_Bolt;dice time=2008 geo=China,Brazil;drillup time;drilldown geo;roll geo,time,entity";
        let ops = parse_pipeline(text).unwrap();
        let printed: Vec<String> = ops.iter().map(ToString::to_string).collect();
        assert_eq!(parse_pipeline(&printed.join("\n")).unwrap(), ops);
    }

    #[test]
    fn errors_name_the_op_index() {
        let err = parse_pipeline("drillup time\nexplode geo").unwrap_err();
        assert_eq!(err.index, 1);
        for bad in [
            "slice",
            "slice entity",
            "drillup",
            "drillup space",
            "roll time,geo",
            "dice",
            "dice geo=A geo=B",
        ] {
            assert_eq!(parse_pipeline(bad).unwrap_err().index, 0, "{bad}");
        }
    }

    #[test]
    fn empty_text_is_empty_pipeline() {
        assert!(parse_pipeline("  \n ; \n").unwrap().is_empty());
    }
}
