//! Loading an instance from SMPS files, a native document or a generator.

use lshaped_core::instance::{random_instance, random_inventory, tiny_inventory, RandomSpec, TwoStageProblem};
use lshaped_core::smps::{parse_native, parse_smps, SmpsError, SmpsTriplet};

use crate::config::{GeneratorName, InstanceSource};
use crate::error::CliError;

pub fn load(source: &InstanceSource) -> Result<TwoStageProblem, CliError> {
    match source {
        InstanceSource::Smps {
            dir,
            stem,
            core,
            time,
            stoch,
        } => {
            let triplet = match (dir, core, time, stoch) {
                (Some(dir), None, None, None) => SmpsTriplet::from_dir(dir, stem.as_deref())?,
                (None, Some(c), Some(t), Some(s)) if stem.is_none() => SmpsTriplet::from_files(c, t, s)?,
                _ => {
                    return Err(CliError::Usage(
                        "an SMPS source needs either `dir` (with optional `stem`) or all of `core`, `time` and `stoch`".into(),
                    ))
                }
            };
            Ok(parse_smps(&triplet)?)
        }
        InstanceSource::Native { path } => {
            let text = std::fs::read_to_string(path).map_err(|source| SmpsError::Io {
                path: path.clone(),
                source,
            })?;
            parse_native(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
        }
        InstanceSource::Generator {
            name,
            items,
            values,
            n,
            m,
            l,
            r,
            scenarios,
            seed,
        } => {
            let given = |fields: &[(&'static str, bool)]| fields.iter().filter(|(_, set)| *set).map(|(k, _)| *k).collect::<Vec<_>>();
            let stray = match name {
                GeneratorName::Tiny => given(&[
                    ("items", items.is_some()),
                    ("values", values.is_some()),
                    ("n", n.is_some()),
                    ("m", m.is_some()),
                    ("l", l.is_some()),
                    ("r", r.is_some()),
                    ("scenarios", scenarios.is_some()),
                    ("seed", seed.is_some()),
                ]),
                GeneratorName::Inventory => given(&[
                    ("n", n.is_some()),
                    ("m", m.is_some()),
                    ("l", l.is_some()),
                    ("r", r.is_some()),
                    ("scenarios", scenarios.is_some()),
                ]),
                GeneratorName::Random => given(&[("items", items.is_some()), ("values", values.is_some())]),
            };
            if !stray.is_empty() {
                return Err(CliError::Usage(format!(
                    "generator `{name:?}` does not take {}",
                    stray.join(", ")
                )));
            }
            let seed = seed.unwrap_or(0);
            Ok(match name {
                GeneratorName::Tiny => tiny_inventory(),
                GeneratorName::Inventory => random_inventory(items.unwrap_or(5), values.unwrap_or(3), seed)?,
                GeneratorName::Random => random_instance(RandomSpec {
                    n: n.unwrap_or(5),
                    m: m.unwrap_or(2),
                    l: l.unwrap_or(4),
                    r: r.unwrap_or(3),
                    scenarios: scenarios.unwrap_or(10),
                    seed,
                })?,
            })
        }
    }
}
