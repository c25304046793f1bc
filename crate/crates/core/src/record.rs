//! Measurement-record container and its on-disk formats: a CSV table
//! (t, i, q, hidden_state) and a compact little-endian binary layout
//! (magic, seed, bin length, JSON metadata, float64 I/Q pairs, optional
//! hidden-state codes).

use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};
use crate::linalg::C64;

/// Qubit branch label attached to a measurement bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateLabel {
    Minus,
    Plus,
    F,
    Undecided,
}

impl StateLabel {
    pub fn code(self) -> u8 {
        match self {
            StateLabel::Minus => 0,
            StateLabel::Plus => 1,
            StateLabel::F => 2,
            StateLabel::Undecided => 255,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        Ok(match code {
            0 => StateLabel::Minus,
            1 => StateLabel::Plus,
            2 => StateLabel::F,
            255 => StateLabel::Undecided,
            other => return Err(Error::Parse(format!("unknown state code {other}"))),
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StateLabel::Minus => "minus",
            StateLabel::Plus => "plus",
            StateLabel::F => "f",
            StateLabel::Undecided => "undecided",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "minus" => StateLabel::Minus,
            "plus" => StateLabel::Plus,
            "f" => StateLabel::F,
            "undecided" => StateLabel::Undecided,
            other => return Err(Error::Parse(format!("unknown state label '{other}'"))),
        })
    }
}

/// A sequence of integrated I/Q bins in units of sqrt(photon), with the
/// generating seed, bin length, and a JSON metadata snapshot. Hidden
/// states are carried when the generator knows them (synthetic records).
#[derive(Debug, Clone)]
pub struct IQRecord {
    pub samples: Vec<C64>,
    pub t_m: f64,
    pub seed: u64,
    pub hidden: Option<Vec<StateLabel>>,
    /// JSON snapshot of the generating parameters
    pub meta: String,
}

const MAGIC: &[u8; 4] = b"IQR1";

impl IQRecord {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.t_m
    }

    fn check_hidden_len(&self) -> Result<()> {
        if let Some(h) = &self.hidden {
            if h.len() != self.samples.len() {
                return Err(Error::DimensionMismatch {
                    context: format!(
                        "{} hidden labels for {} samples",
                        h.len(),
                        self.samples.len()
                    ),
                });
            }
        }
        Ok(())
    }

    /// CSV with header `t,i,q,hidden_state`; the state column is empty
    /// when no hidden sequence is attached. Output is deterministic.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        self.check_hidden_len()?;
        writeln!(w, "t,i,q,hidden_state")?;
        for (k, s) in self.samples.iter().enumerate() {
            let t = k as f64 * self.t_m;
            let label = match &self.hidden {
                Some(h) => h[k].as_str(),
                None => "",
            };
            writeln!(w, "{:e},{:e},{:e},{}", t, s.re, s.im, label)?;
        }
        Ok(())
    }

    /// Parse the CSV form; the bin length is recovered from the time
    /// column, the seed and metadata are not stored in CSV.
    pub fn read_csv<R: BufRead>(r: &mut R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or(Error::EmptyRecord)?
            .map_err(Error::Io)?;
        if header.trim() != "t,i,q,hidden_state" {
            return Err(Error::Parse(format!("unexpected CSV header '{header}'")));
        }
        let mut samples = Vec::new();
        let mut hidden: Vec<StateLabel> = Vec::new();
        let mut any_hidden = false;
        let mut t1 = None;
        for line in lines {
            let line = line.map_err(Error::Io)?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                return Err(Error::Parse(format!("expected 4 columns, got '{line}'")));
            }
            let t: f64 = cols[0]
                .parse()
                .map_err(|_| Error::Parse(format!("bad time '{}'", cols[0])))?;
            if samples.len() == 1 {
                t1 = Some(t);
            }
            let i: f64 = cols[1]
                .parse()
                .map_err(|_| Error::Parse(format!("bad I '{}'", cols[1])))?;
            let q: f64 = cols[2]
                .parse()
                .map_err(|_| Error::Parse(format!("bad Q '{}'", cols[2])))?;
            samples.push(C64::new(i, q));
            if cols[3].is_empty() {
                hidden.push(StateLabel::Undecided);
            } else {
                any_hidden = true;
                hidden.push(StateLabel::parse(cols[3])?);
            }
        }
        if samples.is_empty() {
            return Err(Error::EmptyRecord);
        }
        Ok(Self {
            samples,
            t_m: t1.unwrap_or(0.0),
            seed: 0,
            hidden: if any_hidden { Some(hidden) } else { None },
            meta: String::new(),
        })
    }

    /// Binary layout (all integers and floats little-endian):
    /// magic "IQR1", u64 seed, f64 t_m, u32 metadata byte length, the
    /// metadata JSON, u8 hidden flag, u64 sample count, then f64 (I, Q)
    /// pairs, then one state code byte per sample when the flag is set.
    pub fn write_binary<W: Write>(&self, w: &mut W) -> Result<()> {
        self.check_hidden_len()?;
        w.write_all(MAGIC)?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&self.t_m.to_le_bytes())?;
        let meta = self.meta.as_bytes();
        w.write_all(&(meta.len() as u32).to_le_bytes())?;
        w.write_all(meta)?;
        w.write_all(&[self.hidden.is_some() as u8])?;
        w.write_all(&(self.samples.len() as u64).to_le_bytes())?;
        for s in &self.samples {
            w.write_all(&s.re.to_le_bytes())?;
            w.write_all(&s.im.to_le_bytes())?;
        }
        if let Some(h) = &self.hidden {
            let codes: Vec<u8> = h.iter().map(|x| x.code()).collect();
            w.write_all(&codes)?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(r: &mut R) -> Result<Self> {
        fn take<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
            let mut buf = [0u8; N];
            r.read_exact(&mut buf).map_err(Error::Io)?;
            Ok(buf)
        }
        let magic: [u8; 4] = take(r)?;
        if &magic != MAGIC {
            return Err(Error::Parse("bad record magic".into()));
        }
        let seed = u64::from_le_bytes(take(r)?);
        let t_m = f64::from_le_bytes(take(r)?);
        let meta_len = u32::from_le_bytes(take(r)?) as usize;
        let mut meta_buf = vec![0u8; meta_len];
        r.read_exact(&mut meta_buf).map_err(Error::Io)?;
        let meta = String::from_utf8(meta_buf)
            .map_err(|_| Error::Parse("metadata is not UTF-8".into()))?;
        let has_hidden = take::<1>(r)?[0] != 0;
        let n = u64::from_le_bytes(take(r)?) as usize;
        let mut samples = Vec::with_capacity(n);
        for _ in 0..n {
            let re = f64::from_le_bytes(take(r)?);
            let im = f64::from_le_bytes(take(r)?);
            samples.push(C64::new(re, im));
        }
        let hidden = if has_hidden {
            let mut codes = vec![0u8; n];
            r.read_exact(&mut codes).map_err(Error::Io)?;
            Some(
                codes
                    .into_iter()
                    .map(StateLabel::from_code)
                    .collect::<Result<Vec<_>>>()?,
            )
        } else {
            None
        };
        Ok(Self { samples, t_m, seed, hidden, meta })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn sample_record() -> IQRecord {
        IQRecord {
            samples: vec![
                C64::new(1.25, -0.5),
                C64::new(-0.125, 2.0),
                C64::new(0.0, 0.3),
            ],
            t_m: 4e-7,
            seed: 42,
            hidden: Some(vec![StateLabel::Minus, StateLabel::Plus, StateLabel::F]),
            meta: "{\"kappa\":1.0}".to_string(),
        }
    }

    #[test]
    fn binary_round_trip() {
        let rec = sample_record();
        let mut buf = Vec::new();
        rec.write_binary(&mut buf).unwrap();
        let back = IQRecord::read_binary(&mut Cursor::new(&buf)).unwrap();
        assert_eq!(back.samples, rec.samples);
        assert_eq!(back.t_m, rec.t_m);
        assert_eq!(back.seed, rec.seed);
        assert_eq!(back.hidden, rec.hidden);
        assert_eq!(back.meta, rec.meta);
    }

    #[test]
    fn csv_round_trip() {
        let rec = sample_record();
        let mut buf = Vec::new();
        rec.write_csv(&mut buf).unwrap();
        let back = IQRecord::read_csv(&mut Cursor::new(&buf)).unwrap();
        assert_eq!(back.samples, rec.samples);
        assert_eq!(back.t_m, rec.t_m);
        assert_eq!(back.hidden, rec.hidden);
    }

    #[test]
    fn csv_output_is_deterministic() {
        let rec = sample_record();
        let mut a = Vec::new();
        let mut b = Vec::new();
        rec.write_csv(&mut a).unwrap();
        rec.write_csv(&mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_csv_is_rejected() {
        let mut empty = Cursor::new(b"".to_vec());
        assert!(matches!(
            IQRecord::read_csv(&mut empty),
            Err(Error::EmptyRecord)
        ));
        let mut header_only = Cursor::new(b"t,i,q,hidden_state\n".to_vec());
        assert!(matches!(
            IQRecord::read_csv(&mut header_only),
            Err(Error::EmptyRecord)
        ));
    }

    #[test]
    fn truncated_binary_is_rejected() {
        let rec = sample_record();
        let mut buf = Vec::new();
        rec.write_binary(&mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(IQRecord::read_binary(&mut Cursor::new(&buf)).is_err());
    }

    #[test]
    fn hidden_length_mismatch_is_rejected() {
        let mut rec = sample_record();
        rec.hidden = Some(vec![StateLabel::Minus]);
        let mut buf = Vec::new();
        assert!(rec.write_binary(&mut buf).is_err());
    }
}
