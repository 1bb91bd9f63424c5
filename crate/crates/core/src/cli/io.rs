//! CSV persistence of datasets, posterior draws and result tables, and the
//! binary draw cache.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{de::DeserializeOwned, Serialize};
use sha2::{Digest, Sha256};

use crate::datagen::{CaseStudyData, EvaluationSplits, RealDataset, SimulationDataset};
use crate::error::{Error, Result};
use crate::model::SurrogateSpec;
use crate::sampler::{PosteriorDraws, StageTag};

const CACHE_MAGIC: &[u8; 8] = b"HSDRAWS1";

pub(crate) fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    if let Some(dir) = path.parent() {
        create_dir(dir)?;
    }
    csv::Writer::from_path(path).map_err(Error::from)
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    if !path.is_file() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
        ));
    }
    csv::Reader::from_path(path).map_err(Error::from)
}

/// Shortest representation that parses back to the same bits.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn parse_f64(path: &Path, row: usize, s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Ingest {
        path: path.to_path_buf(),
        row,
        message: format!("`{s}` is not a number"),
    })
}

fn columns(path: &Path, headers: &csv::StringRecord, names: &[String]) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|n| {
            headers
                .iter()
                .position(|h| h == n)
                .ok_or_else(|| Error::Ingest {
                    path: path.to_path_buf(),
                    row: 1,
                    message: format!("missing column `{n}`"),
                })
        })
        .collect()
}

/// Reads the named columns as numbers; empty cells become `None`.
fn read_columns(path: &Path, names: &[String]) -> Result<Vec<Vec<Option<f64>>>> {
    let mut rd = reader(path)?;
    let headers = rd.headers()?.clone();
    let cols = columns(path, &headers, names)?;
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let row = cols
            .iter()
            .map(|&c| match rec.get(c).unwrap_or("") {
                "" => Ok(None),
                s => parse_f64(path, i + 2, s).map(Some),
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(row);
    }
    Ok(out)
}

fn required(path: &Path, rows: Vec<Vec<Option<f64>>>) -> Result<Vec<Vec<f64>>> {
    rows.into_iter()
        .enumerate()
        .map(|(i, r)| {
            r.into_iter()
                .map(|v| {
                    v.ok_or_else(|| Error::Ingest {
                        path: path.to_path_buf(),
                        row: i + 2,
                        message: "empty cell".into(),
                    })
                })
                .collect()
        })
        .collect()
}

fn names_with(base: &[&[String]], extra: &[&str]) -> Vec<String> {
    let mut v: Vec<String> = base.iter().flat_map(|s| s.iter().cloned()).collect();
    v.extend(extra.iter().map(|s| s.to_string()));
    v
}

/// Writes `sim.csv`, `real.csv`, `eval_points.csv` and `eval_splits.csv`.
pub fn save_datasets(dir: &Path, data: &CaseStudyData, spec: &SurrogateSpec) -> Result<()> {
    let xs = spec.input_names();
    let ws = spec.omega_names();

    let mut w = writer(&dir.join("sim.csv"))?;
    w.write_record(names_with(&[xs, ws], &["y"]))?;
    for ((x, o), y) in data.sim.x().iter().zip(data.sim.omega()).zip(data.sim.y()) {
        w.write_record(x.iter().chain(o).chain([y]).map(|&v| fmt_f64(v)))?;
    }
    w.flush().map_err(|e| Error::io(dir, e))?;

    let mut w = writer(&dir.join("real.csv"))?;
    w.write_record(names_with(&[xs], &["y"]))?;
    for (x, y) in data.real.x().iter().zip(data.real.y()) {
        w.write_record(x.iter().chain([y]).map(|&v| fmt_f64(v)))?;
    }
    w.flush().map_err(|e| Error::io(dir, e))?;

    let (noisy, truth) = data.eval.point_values();
    let mut w = writer(&dir.join("eval_points.csv"))?;
    w.write_record(names_with(&[xs], &["y", "truth"]))?;
    for (i, x) in data.eval.inputs.iter().enumerate() {
        let mut rec: Vec<String> = x.iter().map(|&v| fmt_f64(v)).collect();
        rec.push(fmt_f64(noisy[i]));
        rec.push(truth.as_ref().map(|t| fmt_f64(t[i])).unwrap_or_default());
        w.write_record(rec)?;
    }
    w.flush().map_err(|e| Error::io(dir, e))?;

    let mut w = writer(&dir.join("eval_splits.csv"))?;
    w.write_record(["split", "index"])?;
    for s in &data.eval.splits {
        for i in &s.indices {
            w.write_record([s.label.as_str(), &i.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io(dir, e))?;
    Ok(())
}

pub fn load_datasets(dir: &Path, spec: &SurrogateSpec) -> Result<CaseStudyData> {
    let xs = spec.input_names();
    let ws = spec.omega_names();
    let (dx, dw) = (xs.len(), ws.len());

    let path = dir.join("sim.csv");
    let rows = required(&path, read_columns(&path, &names_with(&[xs, ws], &["y"]))?)?;
    let sim = SimulationDataset::new(
        rows.iter().map(|r| r[..dx].to_vec()).collect(),
        rows.iter().map(|r| r[dx..dx + dw].to_vec()).collect(),
        rows.iter().map(|r| r[dx + dw]).collect(),
    )?;

    let path = dir.join("real.csv");
    let rows = required(&path, read_columns(&path, &names_with(&[xs], &["y"]))?)?;
    let real = RealDataset::new(
        rows.iter().map(|r| r[..dx].to_vec()).collect(),
        rows.iter().map(|r| r[dx]).collect(),
    )?;

    let path = dir.join("eval_points.csv");
    let rows = read_columns(&path, &names_with(&[xs], &["y", "truth"]))?;
    let truth: Option<Vec<f64>> = rows.iter().map(|r| r[dx + 1]).collect();
    let rows = required(
        &path,
        rows.into_iter()
            .map(|mut r| {
                r.truncate(dx + 1);
                r
            })
            .collect(),
    )?;
    let inputs = rows.iter().map(|r| r[..dx].to_vec()).collect();
    let noisy = rows.iter().map(|r| r[dx]).collect();

    let path = dir.join("eval_splits.csv");
    let mut groups: Vec<(String, Vec<usize>)> = Vec::new();
    let mut rd = reader(&path)?;
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let label = rec.get(0).unwrap_or("").to_string();
        let index: usize = rec
            .get(1)
            .unwrap_or("")
            .parse()
            .map_err(|_| Error::Ingest {
                path: path.clone(),
                row: i + 2,
                message: "bad split index".into(),
            })?;
        match groups.last_mut() {
            Some((l, idx)) if *l == label => idx.push(index),
            _ => groups.push((label, vec![index])),
        }
    }
    let eval = EvaluationSplits::from_points(inputs, noisy, truth, groups)?;
    Ok(CaseStudyData { sim, real, eval })
}

/// Headered CSV with columns `chain, draw, stage` and one column per
/// parameter. All sets must share parameter names.
pub fn save_draws(path: &Path, sets: &[&PosteriorDraws]) -> Result<()> {
    let names = sets.first().map(|d| d.parameter_names()).unwrap_or(&[]);
    if sets.iter().any(|d| d.parameter_names() != names) {
        return Err(Error::InvalidInput(
            "draw sets have different parameters".into(),
        ));
    }
    let mut w = writer(path)?;
    let mut header = vec!["chain".to_string(), "draw".into(), "stage".into()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    for d in sets {
        for (c, chain) in d.samples().iter().enumerate() {
            for (i, row) in chain.iter().enumerate() {
                let mut rec = vec![c.to_string(), i.to_string(), d.stage().as_str().to_string()];
                rec.extend(row.iter().map(|&v| fmt_f64(v)));
                w.write_record(&rec)?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn parse_stage(s: &str) -> Option<StageTag> {
    [
        StageTag::JointTraining,
        StageTag::Refinement,
        StageTag::DataDriven,
        StageTag::Generic,
    ]
    .into_iter()
    .find(|t| t.as_str() == s)
}

/// Reads draw sets back in file order, split at each change of stage.
pub fn load_draws(path: &Path) -> Result<Vec<PosteriorDraws>> {
    let mut rd = reader(path)?;
    let headers = rd.headers()?.clone();
    if headers.len() < 3
        || &headers[0] != "chain"
        || &headers[1] != "draw"
        || &headers[2] != "stage"
    {
        return Err(Error::Ingest {
            path: path.to_path_buf(),
            row: 1,
            message: "expected columns chain, draw, stage".into(),
        });
    }
    let names: Vec<String> = headers.iter().skip(3).map(String::from).collect();
    let mut sets: Vec<(StageTag, Vec<Vec<Vec<f64>>>)> = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let bad = |m: &str| Error::Ingest {
            path: path.to_path_buf(),
            row,
            message: m.to_string(),
        };
        let chain: usize = rec[0].parse().map_err(|_| bad("bad chain index"))?;
        let stage = parse_stage(&rec[2]).ok_or_else(|| bad("unknown stage"))?;
        let values = (3..rec.len())
            .map(|c| parse_f64(path, row, &rec[c]))
            .collect::<Result<Vec<_>>>()?;
        if sets.last().map(|s| s.0) != Some(stage) {
            sets.push((stage, Vec::new()));
        }
        let chains = &mut sets.last_mut().expect("pushed above").1;
        if chain == chains.len() {
            chains.push(Vec::new());
        } else if chain + 1 != chains.len() {
            return Err(bad("chains out of order"));
        }
        chains[chain].push(values);
    }
    sets.into_iter()
        .map(|(stage, samples)| PosteriorDraws::new(names.clone(), samples, stage))
        .collect()
}

/// Headered CSV of serializable rows.
pub fn save_table<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = writer(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn load_table<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut rd = reader(path)?;
    rd.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Hex SHA-256 over the given parts, each length-prefixed.
pub fn cache_key(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}

fn stage_code(s: StageTag) -> u8 {
    match s {
        StageTag::JointTraining => 0,
        StageTag::Refinement => 1,
        StageTag::DataDriven => 2,
        StageTag::Generic => 3,
    }
}

/// Compact little-endian dump of draw sets and the seconds spent training them.
pub fn write_cache(path: &Path, sets: &[&PosteriorDraws], seconds: f64) -> Result<()> {
    if let Some(dir) = path.parent() {
        create_dir(dir)?;
    }
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    w.write_all(CACHE_MAGIC).map_err(io)?;
    w.write_u32::<LittleEndian>(sets.len() as u32).map_err(io)?;
    for d in sets {
        w.write_u8(stage_code(d.stage())).map_err(io)?;
        w.write_u32::<LittleEndian>(d.n_params() as u32)
            .map_err(io)?;
        for n in d.parameter_names() {
            w.write_u32::<LittleEndian>(n.len() as u32).map_err(io)?;
            w.write_all(n.as_bytes()).map_err(io)?;
        }
        w.write_u32::<LittleEndian>(d.n_chains() as u32)
            .map_err(io)?;
        w.write_u32::<LittleEndian>(d.n_draws() as u32)
            .map_err(io)?;
        for v in d.samples().iter().flatten().flatten() {
            w.write_f64::<LittleEndian>(*v).map_err(io)?;
        }
    }
    w.write_f64::<LittleEndian>(seconds).map_err(io)?;
    w.flush().map_err(io)
}

pub fn read_cache(path: &Path) -> Result<(Vec<PosteriorDraws>, f64)> {
    let io = |e| Error::io(path, e);
    let mut r = BufReader::new(File::open(path).map_err(io)?);
    let corrupt = |m: &str| Error::Ingest {
        path: path.to_path_buf(),
        row: 0,
        message: m.to_string(),
    };
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != CACHE_MAGIC {
        return Err(corrupt("not a draw cache"));
    }
    let n_sets = r.read_u32::<LittleEndian>().map_err(io)?;
    let mut out = Vec::with_capacity(n_sets as usize);
    for _ in 0..n_sets {
        let stage = match r.read_u8().map_err(io)? {
            0 => StageTag::JointTraining,
            1 => StageTag::Refinement,
            2 => StageTag::DataDriven,
            3 => StageTag::Generic,
            _ => return Err(corrupt("unknown stage")),
        };
        let n_params = r.read_u32::<LittleEndian>().map_err(io)? as usize;
        let mut names = Vec::with_capacity(n_params);
        for _ in 0..n_params {
            let len = r.read_u32::<LittleEndian>().map_err(io)? as usize;
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf).map_err(io)?;
            names.push(String::from_utf8(buf).map_err(|_| corrupt("bad name"))?);
        }
        let n_chains = r.read_u32::<LittleEndian>().map_err(io)? as usize;
        let n_draws = r.read_u32::<LittleEndian>().map_err(io)? as usize;
        let mut samples = vec![vec![vec![0.0; n_params]; n_draws]; n_chains];
        for v in samples.iter_mut().flatten().flatten() {
            *v = r.read_f64::<LittleEndian>().map_err(io)?;
        }
        out.push(PosteriorDraws::new(names, samples, stage)?);
    }
    let seconds = r.read_f64::<LittleEndian>().map_err(io)?;
    let mut rest = Vec::new();
    r.read_to_end(&mut rest).map_err(io)?;
    if !rest.is_empty() {
        return Err(corrupt("trailing bytes"));
    }
    Ok((out, seconds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::CaseStudy;

    fn draws(stage: StageTag) -> PosteriorDraws {
        let names = vec!["c0".to_string(), "omega".into(), "sigma".into()];
        let samples = (0..2)
            .map(|c| {
                (0..3)
                    .map(|i| {
                        vec![
                            0.1 * c as f64 + i as f64,
                            1e-300,
                            std::f64::consts::PI / (i + 1) as f64,
                        ]
                    })
                    .collect()
            })
            .collect();
        PosteriorDraws::new(names, samples, stage).unwrap()
    }

    #[test]
    fn draws_round_trip_through_csv_and_cache() {
        let dir = tempfile::tempdir().unwrap();
        let a = draws(StageTag::JointTraining);
        let b = draws(StageTag::Refinement).regroup(6);
        let csv = dir.path().join("d.csv");
        save_draws(&csv, &[&a, &b]).unwrap();
        assert_eq!(load_draws(&csv).unwrap(), vec![a.clone(), b.clone()]);
        let bin = dir.path().join("cache").join("d.bin");
        write_cache(&bin, &[&a, &b], 2.5).unwrap();
        assert_eq!(read_cache(&bin).unwrap(), (vec![a, b], 2.5));
    }

    #[test]
    fn csv_header_lists_chain_draw_stage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        save_draws(&path, &[&draws(StageTag::DataDriven)]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("chain,draw,stage,c0,omega,sigma\n0,0,data_driven,"));
    }

    #[test]
    fn datasets_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        for study in [CaseStudy::Cs1, CaseStudy::Cs2_1] {
            let data = study.load(5, dir.path()).unwrap();
            let spec = study.surrogate_spec().unwrap();
            let sub = dir.path().join(study.as_str());
            save_datasets(&sub, &data, &spec).unwrap();
            assert_eq!(load_datasets(&sub, &spec).unwrap(), data);
        }
    }

    #[test]
    fn truncated_cache_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.bin");
        write_cache(&path, &[&draws(StageTag::Generic)], 0.0).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 4]).unwrap();
        assert!(read_cache(&path).is_err());
        std::fs::write(&path, b"garbage!").unwrap();
        assert!(read_cache(&path).is_err());
    }

    #[test]
    fn cache_keys_separate_parts() {
        assert_ne!(cache_key(&[b"ab", b"c"]), cache_key(&[b"a", b"bc"]));
        assert_eq!(cache_key(&[b"x"]).len(), 64);
    }
}
