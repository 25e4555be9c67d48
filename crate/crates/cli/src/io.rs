//! CSV ingestion of count data and atomic output files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use macrotest::likelihood::{CountBin, NestedShot, PhaseBin};
use macrotest::ExperimentModel;

use crate::config::Kind;
use crate::InputError;

pub const TALBOT_LAU_HEADER: [&str; 3] = ["x_s_m", "n_plus", "n_zero"];
pub const BEC_HEADER: [&str; 2] = ["shot_id", "n_a"];
pub const NESTED_HEADER: [&str; 3] = ["shot_id", "delta_phi_rad", "delta_phi_true_rad"];
pub const SINGLE_ATOM_HEADER: [&str; 3] = ["k", "N_k", "n_a"];

/// Recorded data of one experiment family.
#[derive(Debug, Clone, PartialEq)]
pub enum Data {
    TalbotLau(Vec<CountBin>),
    Bec(Vec<f64>),
    Nested(Vec<NestedShot>),
    SingleAtom(Vec<PhaseBin>),
}

impl Data {
    pub fn empty(kind: Kind) -> Self {
        match kind {
            Kind::TalbotLau => Data::TalbotLau(Vec::new()),
            Kind::Bec => Data::Bec(Vec::new()),
            Kind::Nested => Data::Nested(Vec::new()),
            Kind::SingleAtom => Data::SingleAtom(Vec::new()),
        }
    }

    fn extend(&mut self, other: Data) {
        match (self, other) {
            (Data::TalbotLau(a), Data::TalbotLau(b)) => a.extend(b),
            (Data::Bec(a), Data::Bec(b)) => a.extend(b),
            (Data::Nested(a), Data::Nested(b)) => a.extend(b),
            (Data::SingleAtom(a), Data::SingleAtom(b)) => a.extend(b),
            _ => unreachable!("data files are read for one experiment kind"),
        }
    }

    /// Records held by an experiment model.
    pub fn of(model: &ExperimentModel) -> Self {
        match model {
            ExperimentModel::TalbotLau(r) => {
                Data::TalbotLau(r.bins.iter().map(|b| CountBin { n_minus: None, ..b.clone() }).collect())
            }
            ExperimentModel::Bec(c) => Data::Bec(c.shots.clone()),
            ExperimentModel::Nested(c) => Data::Nested(c.shots.clone()),
            ExperimentModel::SingleAtom(c) => Data::SingleAtom(c.bins.clone()),
        }
    }

    /// Copy of `model` holding these records.
    pub fn attach(self, model: &ExperimentModel) -> ExperimentModel {
        match (model.clone(), self) {
            (ExperimentModel::TalbotLau(r), Data::TalbotLau(bins)) => {
                ExperimentModel::TalbotLau(macrotest::likelihood::TalbotLauRun { bins, ..r })
            }
            (ExperimentModel::Bec(c), Data::Bec(shots)) => {
                ExperimentModel::Bec(macrotest::likelihood::BecMziConfig { shots, ..c })
            }
            (ExperimentModel::Nested(c), Data::Nested(shots)) => {
                ExperimentModel::Nested(macrotest::likelihood::NestedMziConfig { shots, ..c })
            }
            (ExperimentModel::SingleAtom(c), Data::SingleAtom(bins)) => {
                ExperimentModel::SingleAtom(macrotest::likelihood::SingleAtomConfig { bins, ..c })
            }
            _ => unreachable!("data kind follows the config kind"),
        }
    }
}

fn header(kind: Kind) -> &'static [&'static str] {
    match kind {
        Kind::TalbotLau => &TALBOT_LAU_HEADER,
        Kind::Bec => &BEC_HEADER,
        Kind::Nested => &NESTED_HEADER,
        Kind::SingleAtom => &SINGLE_ATOM_HEADER,
    }
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str, line: u64) -> Result<T> {
    let s = rec.get(i).unwrap_or("");
    s.parse().map_err(|_| InputError(format!("line {line}: cannot parse {name} = '{s}'")).into())
}

/// Parse one data file of the given kind.
pub fn read_data_from<R: std::io::Read>(kind: Kind, reader: R) -> Result<Data> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
    let expected = header(kind);
    let got = rdr.headers().map_err(|e| InputError(format!("header: {e}")))?.clone();
    if got.iter().ne(expected.iter().copied()) {
        bail!(InputError(format!(
            "header '{}' does not match the {kind:?} schema '{}'",
            got.iter().collect::<Vec<_>>().join(","),
            expected.join(",")
        )));
    }
    let mut data = Data::empty(kind);
    for rec in rdr.records() {
        let rec = rec.map_err(|e| InputError(format!("malformed CSV: {e}")))?;
        let line = rec.position().map_or(0, |p| p.line());
        match &mut data {
            Data::TalbotLau(v) => {
                let x_s: f64 = field(&rec, 0, "x_s_m", line)?;
                let n_plus = field(&rec, 1, "n_plus", line)?;
                let n_zero = match rec.get(2).unwrap_or("") {
                    "" => None,
                    _ => Some(field(&rec, 2, "n_zero", line)?),
                };
                v.push(CountBin { x_s, n_plus, n_zero, n_minus: None });
            }
            Data::Bec(v) => {
                let _: u64 = field(&rec, 0, "shot_id", line)?;
                v.push(field(&rec, 1, "n_a", line)?);
            }
            Data::Nested(v) => {
                let _: u64 = field(&rec, 0, "shot_id", line)?;
                v.push(NestedShot {
                    delta_phi: field(&rec, 1, "delta_phi_rad", line)?,
                    delta_phi_true: field(&rec, 2, "delta_phi_true_rad", line)?,
                });
            }
            Data::SingleAtom(v) => v.push(PhaseBin {
                k: field(&rec, 0, "k", line)?,
                n_total: field(&rec, 1, "N_k", line)?,
                n_a: field(&rec, 2, "n_a", line)?,
            }),
        }
    }
    Ok(data)
}

/// Read and concatenate data files.
pub fn read_data(kind: Kind, paths: &[PathBuf]) -> Result<Data> {
    let mut data = Data::empty(kind);
    for p in paths {
        let f = File::open(p).map_err(|e| InputError(format!("{}: {e}", p.display())))?;
        data.extend(read_data_from(kind, f).with_context(|| format!("in data file {}", p.display()))?);
    }
    Ok(data)
}

/// Write records in the schema of their kind, after `comments` lines.
pub fn write_data<W: Write>(mut w: W, data: &Data, comments: &[String]) -> std::io::Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    let kind = match data {
        Data::TalbotLau(_) => Kind::TalbotLau,
        Data::Bec(_) => Kind::Bec,
        Data::Nested(_) => Kind::Nested,
        Data::SingleAtom(_) => Kind::SingleAtom,
    };
    writeln!(w, "{}", header(kind).join(","))?;
    match data {
        Data::TalbotLau(v) => {
            for b in v {
                match b.n_zero {
                    Some(z) => writeln!(w, "{:e},{},{z}", b.x_s, b.n_plus)?,
                    None => writeln!(w, "{:e},{},", b.x_s, b.n_plus)?,
                }
            }
        }
        Data::Bec(v) => {
            for (i, n) in v.iter().enumerate() {
                writeln!(w, "{i},{n:e}")?;
            }
        }
        Data::Nested(v) => {
            for (i, s) in v.iter().enumerate() {
                writeln!(w, "{i},{:e},{:e}", s.delta_phi, s.delta_phi_true)?;
            }
        }
        Data::SingleAtom(v) => {
            for b in v {
                writeln!(w, "{},{},{}", b.k, b.n_total, b.n_a)?;
            }
        }
    }
    Ok(())
}

/// Write `name` inside `dir` through a temporary file that is renamed into
/// place once complete.
pub fn write_atomic<F>(dir: &Path, name: &str, fill: F) -> Result<PathBuf>
where
    F: FnOnce(&mut BufWriter<&mut tempfile::NamedTempFile>) -> std::io::Result<()>,
{
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp =
        tempfile::NamedTempFile::new_in(dir).with_context(|| format!("temporary file in {}", dir.display()))?;
    {
        let mut w = BufWriter::new(&mut tmp);
        fill(&mut w).with_context(|| format!("writing {name}"))?;
        w.flush()?;
    }
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644))?;
    }
    let path = dir.join(name);
    tmp.persist(&path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(path)
}
