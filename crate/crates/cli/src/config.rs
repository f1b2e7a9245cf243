//! TOML task files and operator resolution.
//!
//! A task file may set `task`, `seed`, `output`, an `[operator]` table, a
//! `[window]` table and one section per subcommand. Unknown keys anywhere are
//! rejected.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::de::IntoDeserializer;
use serde::Deserialize;

use jacobi_weyl::io::read_coefficients_csv;
use jacobi_weyl::lattice::{CoefficientModel, LatticeWindow, ModelSpec};

use crate::tasks::{
    BmArgs, DbArgs, HlArgs, KreinArgs, MeasureArgs, ReconstructArgs, SpectrumArgs, TransformArgs, VerifyArgs,
    WeylArgs,
};
use crate::Failure;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct TaskConfig {
    pub task: Option<String>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub operator: Option<toml::Spanned<toml::Table>>,
    pub window: Option<WindowConfig>,
    pub spectrum: Option<SpectrumArgs>,
    pub measure: Option<MeasureArgs>,
    pub weyl: Option<WeylArgs>,
    pub transform: Option<TransformArgs>,
    pub krein: Option<KreinArgs>,
    pub reconstruct: Option<ReconstructArgs>,
    pub bm_check: Option<BmArgs>,
    pub hl_probe: Option<HlArgs>,
    pub db_check: Option<DbArgs>,
    pub verify_all: Option<VerifyArgs>,

    /// Parsed `[operator]`, with file paths already rebased.
    #[serde(skip)]
    pub operator_source: Option<OperatorSource>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub left: i64,
    pub right: i64,
}

#[derive(Debug, Clone)]
pub enum OperatorSource {
    Spec(ModelSpec),
    TableFile(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Free,
    LinearPotential,
    GeometricA,
}

/// Operator selection on the command line. Overrides `[operator]` and
/// `[window]` from the task file.
#[derive(Debug, Default, Args)]
pub struct OperatorArgs {
    /// Coefficient family
    #[arg(long, global = true, value_enum)]
    pub family: Option<Family>,
    /// Family parameter: `c` for linear-potential, `q` for geometric-a
    #[arg(long, global = true)]
    pub param: Option<f64>,
    /// Coefficient table CSV (header n,a,b)
    #[arg(long, global = true, conflicts_with = "family")]
    pub table: Option<PathBuf>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub left: Option<i64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub right: Option<i64>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn rebase(dir: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = dir.join(&*path);
        }
    }
}

impl TaskConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
    }

    /// Relative paths inside the file are taken relative to `dir`.
    pub fn parse(text: &str, dir: &Path) -> Result<Self, String> {
        let mut cfg: TaskConfig = toml::from_str(text).map_err(|e| match e.span() {
            Some(span) => format!("line {}: {}", line_of(text, span.start), e.message()),
            None => e.message().to_string(),
        })?;
        if let Some(op) = &cfg.operator {
            let line = line_of(text, op.span().start);
            let mut table = op.get_ref().clone();
            let source = if let Some(v) = table.remove("table-file") {
                if !table.is_empty() {
                    let keys: Vec<_> = table.keys().cloned().collect();
                    return Err(format!("line {line}: operator: table-file excludes {keys:?}"));
                }
                let p = v
                    .as_str()
                    .ok_or_else(|| format!("line {line}: operator: table-file must be a string"))?;
                OperatorSource::TableFile(PathBuf::from(p))
            } else {
                let spec = ModelSpec::deserialize(toml::Value::Table(table).into_deserializer())
                    .map_err(|e| format!("line {line}: operator: {}", e.message()))?;
                CoefficientModel::try_from(spec.clone()).map_err(|e| format!("line {line}: operator: {e}"))?;
                OperatorSource::Spec(spec)
            };
            cfg.operator_source = Some(source);
        }
        if let Some(OperatorSource::TableFile(p)) = &mut cfg.operator_source {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        rebase(dir, &mut cfg.output);
        if let Some(s) = &mut cfg.measure {
            rebase(dir, &mut s.task_list);
        }
        if let Some(s) = &mut cfg.transform {
            rebase(dir, &mut s.input);
        }
        if let Some(s) = &mut cfg.krein {
            rebase(dir, &mut s.spectra);
        }
        if let Some(s) = &mut cfg.reconstruct {
            rebase(dir, &mut s.input);
        }
        if let Some(s) = &mut cfg.bm_check {
            rebase(dir, &mut s.other_table);
        }
        Ok(cfg)
    }
}

/// Drops `#` metadata lines so artifacts written by this tool can be read
/// back by the library readers.
pub fn strip_comments(text: &str) -> String {
    text.lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect()
}

pub fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

/// Table model plus the window its rows cover.
pub fn load_table(path: &Path) -> Result<(CoefficientModel, LatticeWindow), Failure> {
    let text = strip_comments(&read_text(path)?);
    let model = read_coefficients_csv(text.as_bytes())
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let d = model.a_domain();
    let window = match (d.min, d.max) {
        (Some(lo), Some(hi)) => LatticeWindow::new(lo, hi + 1)
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?,
        _ => return Err(Failure::Config(format!("{}: empty a column", path.display()))),
    };
    Ok((model, window))
}

pub struct Operator {
    pub model: CoefficientModel,
    pub window: LatticeWindow,
}

pub fn resolve_operator(args: &OperatorArgs, cfg: &TaskConfig) -> Result<Operator, Failure> {
    let (model, inferred) = if let Some(path) = &args.table {
        let (m, w) = load_table(path)?;
        (m, Some(w))
    } else if let Some(family) = args.family {
        let need = |name: &str| {
            args.param
                .ok_or_else(|| Failure::Config(format!("--family {name} needs --param")))
        };
        let spec = match family {
            Family::Free => ModelSpec::Free {},
            Family::LinearPotential => ModelSpec::LinearPotential { c: need("linear-potential")? },
            Family::GeometricA => ModelSpec::GeometricA { q: need("geometric-a")? },
        };
        (
            CoefficientModel::try_from(spec).map_err(|e| Failure::Config(e.to_string()))?,
            None,
        )
    } else {
        match &cfg.operator_source {
            Some(OperatorSource::Spec(spec)) => (
                CoefficientModel::try_from(spec.clone()).map_err(|e| Failure::Config(e.to_string()))?,
                None,
            ),
            Some(OperatorSource::TableFile(path)) => {
                let (m, w) = load_table(path)?;
                (m, Some(w))
            }
            None => {
                return Err(Failure::Config(
                    "no operator: pass --family or --table, or give an [operator] table".into(),
                ))
            }
        }
    };
    let left = args.left.or(cfg.window.map(|w| w.left)).or(inferred.map(|w| w.left));
    let right = args.right.or(cfg.window.map(|w| w.right)).or(inferred.map(|w| w.right));
    let (Some(left), Some(right)) = (left, right) else {
        return Err(Failure::Config(
            "no window: pass --left and --right, or give a [window] table".into(),
        ));
    };
    let window = LatticeWindow::new(left, right).map_err(|e| Failure::Config(e.to_string()))?;
    model
        .check_window(&window)
        .map_err(|e| Failure::Config(e.to_string()))?;
    Ok(Operator { model, window })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_reports_line() {
        let err = TaskConfig::parse("seed = 1\n\n[window]\nleft = 0\nrigth = 4\n", Path::new(".")).unwrap_err();
        assert!(err.starts_with("line 5:"), "{err}");
        assert!(err.contains("rigth"), "{err}");
    }

    #[test]
    fn operator_unknown_field_reports_line() {
        let err = TaskConfig::parse("[operator]\nfamily = \"linear-potential\"\nk = 1.0\n", Path::new(".")).unwrap_err();
        assert!(err.starts_with("line 1:"), "{err}");
        let err = TaskConfig::parse("[operator]\nfamily = \"geometric-a\"\nq = 2.0\n", Path::new(".")).unwrap_err();
        assert!(err.contains("outside"), "{err}");
    }

    #[test]
    fn table_file_is_rebased() {
        let cfg = TaskConfig::parse("[operator]\ntable-file = \"t.csv\"\n", Path::new("/data")).unwrap();
        match cfg.operator_source {
            Some(OperatorSource::TableFile(p)) => assert_eq!(p, PathBuf::from("/data/t.csv")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn spec_round_trips_through_toml() {
        let spec = ModelSpec::Shifted {
            offset: -2,
            base: Box::new(ModelSpec::Table {
                a_start: -1,
                a: vec![0.1, 1.0 / 3.0, 2.0],
                b_start: 0,
                b: vec![-0.25, 1e-300],
            }),
        };
        let text = toml::to_string(&spec).unwrap();
        let back: ModelSpec = toml::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }
}
