//! Delimited point tables. One row per point; a leading `#` line carries
//! the per-instance metadata. Floats are written in shortest round-trip
//! form so that write → read is exact.

use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::kinematics::JointType;
use crate::oracle::PredictionSet;
use crate::scenegen::{BBox2d, Observation};

pub const OBSERVATION_COLUMNS: [&str; 17] = [
    "x", "y", "z", "r", "g", "b", "label", "nocs_x", "nocs_y", "nocs_z", "jloc_x", "jloc_y", "jloc_z", "jaxis_x",
    "jaxis_y", "jaxis_z", "jtype",
];

pub const PREDICTION_COLUMNS: [&str; 13] = [
    "label",
    "nocs_x",
    "nocs_y",
    "nocs_z",
    "jloc_x",
    "jloc_y",
    "jloc_z",
    "jaxis_x",
    "jaxis_y",
    "jaxis_z",
    "p_fixed",
    "p_prismatic",
    "p_revolute",
];

fn push_vec(row: &mut Vec<String>, v: &Vec3) {
    row.extend(v.iter().map(|c| c.to_string()));
}

pub fn write_observation<W: Write>(obs: &Observation, out: W) -> Result<()> {
    obs.validate()?;
    let mut out = out;
    let b = &obs.bbox2d;
    writeln!(
        out,
        "# parts={} bbox={},{},{},{}",
        obs.num_parts, b.u1, b.v1, b.u2, b.v2
    )?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(OBSERVATION_COLUMNS)?;
    for j in 0..obs.len() {
        let mut row = Vec::with_capacity(OBSERVATION_COLUMNS.len());
        push_vec(&mut row, &obs.points_cam[j]);
        push_vec(&mut row, &obs.colors[j]);
        row.push(obs.gt_labels[j].to_string());
        push_vec(&mut row, &obs.gt_nocs[j]);
        push_vec(&mut row, &obs.gt_joint_loc[j]);
        push_vec(&mut row, &obs.gt_joint_axis[j]);
        row.push(obs.gt_joint_type[j].class_index().to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_predictions<W: Write>(pred: &PredictionSet, out: W) -> Result<()> {
    pred.validate()?;
    let mut out = out;
    writeln!(out, "# points={}", pred.len())?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PREDICTION_COLUMNS)?;
    for j in 0..pred.len() {
        let mut row = Vec::with_capacity(PREDICTION_COLUMNS.len());
        row.push(pred.seg[j].to_string());
        push_vec(&mut row, &pred.nocs[j]);
        push_vec(&mut row, &pred.joint_loc[j]);
        push_vec(&mut row, &pred.joint_axis[j]);
        row.extend(pred.joint_type_probs[j].iter().map(|p| p.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Splits the `#` metadata line from the table body.
fn split_meta<R: Read>(input: R) -> Result<(String, Vec<u8>)> {
    let mut reader = BufReader::new(input);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let meta = first
        .trim_end()
        .strip_prefix('#')
        .ok_or_else(|| Error::Malformed("missing '#' metadata line".into()))?
        .trim()
        .to_string();
    let mut body = Vec::new();
    reader.read_to_end(&mut body)?;
    Ok((meta, body))
}

fn meta_field<'a>(meta: &'a str, key: &str) -> Result<&'a str> {
    meta.split_whitespace()
        .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .ok_or_else(|| Error::Malformed(format!("metadata lacks '{key}'")))
}

fn num<T: std::str::FromStr>(s: &str, what: &str, line: usize) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Malformed(format!("line {line}: bad {what} '{s}'")))
}

struct Rows {
    records: Vec<csv::StringRecord>,
}

impl Rows {
    fn parse(body: &[u8], expected: &[&str]) -> Result<Rows> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(body);
        let header = r.headers()?.clone();
        if header.iter().ne(expected.iter().copied()) {
            return Err(Error::Malformed(format!(
                "unexpected header {:?}",
                header.iter().collect::<Vec<_>>()
            )));
        }
        let records = r.records().collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Rows { records })
    }
}

fn vec_at(rec: &csv::StringRecord, at: usize, line: usize) -> Result<Vec3> {
    Ok(Vec3::new(
        num(&rec[at], "number", line)?,
        num(&rec[at + 1], "number", line)?,
        num(&rec[at + 2], "number", line)?,
    ))
}

pub fn read_observation<R: Read>(input: R) -> Result<Observation> {
    let (meta, body) = split_meta(input)?;
    let num_parts: usize = num(meta_field(&meta, "parts")?, "part count", 1)?;
    let bbox: Vec<f64> = meta_field(&meta, "bbox")?
        .split(',')
        .map(|s| num(s, "bbox", 1))
        .collect::<Result<_>>()?;
    let [u1, v1, u2, v2] = bbox[..] else {
        return Err(Error::Malformed("bbox needs four values".into()));
    };
    let rows = Rows::parse(&body, &OBSERVATION_COLUMNS)?;
    let n = rows.records.len();
    let mut obs = Observation {
        num_parts,
        bbox2d: BBox2d { u1, v1, u2, v2 },
        points_cam: Vec::with_capacity(n),
        colors: Vec::with_capacity(n),
        gt_labels: Vec::with_capacity(n),
        gt_nocs: Vec::with_capacity(n),
        gt_joint_loc: Vec::with_capacity(n),
        gt_joint_axis: Vec::with_capacity(n),
        gt_joint_type: Vec::with_capacity(n),
    };
    for (i, rec) in rows.records.iter().enumerate() {
        let line = i + 3;
        obs.points_cam.push(vec_at(rec, 0, line)?);
        obs.colors.push(vec_at(rec, 3, line)?);
        obs.gt_labels.push(num(&rec[6], "label", line)?);
        obs.gt_nocs.push(vec_at(rec, 7, line)?);
        obs.gt_joint_loc.push(vec_at(rec, 10, line)?);
        obs.gt_joint_axis.push(vec_at(rec, 13, line)?);
        let t: usize = num(&rec[16], "joint type", line)?;
        obs.gt_joint_type.push(
            JointType::from_class_index(t).ok_or_else(|| Error::Malformed(format!("line {line}: joint type {t}")))?,
        );
    }
    if obs.points_cam.iter().flat_map(|p| p.iter()).any(|c| !c.is_finite()) {
        return Err(Error::Malformed("non-finite point coordinate".into()));
    }
    obs.validate()?;
    Ok(obs)
}

pub fn read_predictions<R: Read>(input: R) -> Result<PredictionSet> {
    let (_, body) = split_meta(input)?;
    let rows = Rows::parse(&body, &PREDICTION_COLUMNS)?;
    let n = rows.records.len();
    let mut pred = PredictionSet {
        seg: Vec::with_capacity(n),
        nocs: Vec::with_capacity(n),
        joint_loc: Vec::with_capacity(n),
        joint_axis: Vec::with_capacity(n),
        joint_type_probs: Vec::with_capacity(n),
    };
    for (i, rec) in rows.records.iter().enumerate() {
        let line = i + 3;
        pred.seg.push(num(&rec[0], "label", line)?);
        pred.nocs.push(vec_at(rec, 1, line)?);
        pred.joint_loc.push(vec_at(rec, 4, line)?);
        pred.joint_axis.push(vec_at(rec, 7, line)?);
        pred.joint_type_probs.push([
            num(&rec[10], "probability", line)?,
            num(&rec[11], "probability", line)?,
            num(&rec[12], "probability", line)?,
        ]);
    }
    pred.validate()?;
    Ok(pred)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::catalog;
    use crate::oracle::{perturb, NoiseConfig};
    use crate::scenegen::{desk_camera, isolated_instance};

    fn obs() -> Observation {
        let m = catalog::lamp();
        isolated_instance(&m, &desk_camera(0.75), 0.75, vec![0.0, 0.3], 1.1, 0.2, 300, 4)
            .unwrap()
            .1
    }

    #[test]
    fn observation_round_trip_is_exact() {
        let o = obs();
        let mut buf = Vec::new();
        write_observation(&o, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("x,y,z,r,g,b,label,nocs_x"));
        assert_eq!(read_observation(&buf[..]).unwrap(), o);
    }

    #[test]
    fn prediction_round_trip_is_exact() {
        let cfg = NoiseConfig {
            nocs_sigma: 0.01,
            seg_flip_prob: 0.1,
            ..Default::default()
        };
        let p = perturb(&obs(), &cfg, 9).unwrap();
        let mut buf = Vec::new();
        write_predictions(&p, &mut buf).unwrap();
        assert_eq!(read_predictions(&buf[..]).unwrap(), p);
    }

    #[test]
    fn corrupt_tables_are_rejected() {
        let o = obs();
        let mut buf = Vec::new();
        write_observation(&o, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(read_observation(text.replacen("# parts", "parts", 1).as_bytes()).is_err());
        let mut lines: Vec<&str> = text.lines().collect();
        lines[5] = "1,2,oops";
        assert!(read_observation(lines.join("\n").as_bytes()).is_err());
        assert!(read_observation(&b"garbage"[..]).is_err());
        let bad_label = text.replacen("# parts=3", "# parts=1", 1);
        assert!(read_observation(bad_label.as_bytes()).is_err());
    }
}
