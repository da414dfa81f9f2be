//! Trajectory store for experience replay.
//!
//! Runs stay in memory up to `cap`; beyond that the in-memory batch is flushed
//! to an anonymous temporary file as little-endian records. Iteration is
//! always in insertion order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};

use crate::error::Result;
use crate::scenario::{Exit, Facet, Trajectory};

#[derive(Debug)]
pub struct ReplayBuffer {
    memory: Vec<Trajectory>,
    cap: usize,
    spill: Option<File>,
    spilled: usize,
}

impl Default for ReplayBuffer {
    fn default() -> Self {
        ReplayBuffer::unbounded()
    }
}

impl ReplayBuffer {
    pub fn unbounded() -> Self {
        ReplayBuffer::with_cap(usize::MAX)
    }

    /// Keeps at most `cap` runs in memory before spilling.
    pub fn with_cap(cap: usize) -> Self {
        ReplayBuffer { memory: Vec::new(), cap: cap.max(1), spill: None, spilled: 0 }
    }

    pub fn len(&self) -> usize {
        self.memory.len() + self.spilled
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spilled(&self) -> usize {
        self.spilled
    }

    pub fn push(&mut self, t: Trajectory) -> Result<()> {
        self.memory.push(t);
        if self.memory.len() >= self.cap {
            self.flush()?;
        }
        Ok(())
    }

    fn flush(&mut self) -> Result<()> {
        if self.spill.is_none() {
            self.spill = Some(tempfile::tempfile()?);
        }
        let file = self.spill.as_ref().expect("just created");
        let mut f: &File = file;
        f.seek(SeekFrom::End(0))?;
        let mut w = BufWriter::new(f);
        for t in self.memory.drain(..) {
            encode(&mut w, &t)?;
            self.spilled += 1;
        }
        w.flush()?;
        Ok(())
    }

    /// Visits every stored run, oldest first.
    pub fn for_each(&self, mut f: impl FnMut(&Trajectory) -> Result<()>) -> Result<()> {
        if let Some(file) = &self.spill {
            let mut h: &File = file;
            h.seek(SeekFrom::Start(0))?;
            let mut r = BufReader::new(h);
            for _ in 0..self.spilled {
                f(&decode(&mut r)?)?;
            }
        }
        for t in &self.memory {
            f(t)?;
        }
        Ok(())
    }
}

fn put_u64<W: Write>(w: &mut W, v: u64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_points<W: Write>(w: &mut W, pts: &[Vec<f64>]) -> std::io::Result<()> {
    put_u64(w, pts.len() as u64)?;
    put_u64(w, pts.first().map_or(0, |p| p.len()) as u64)?;
    for p in pts {
        for x in p {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

fn encode<W: Write>(w: &mut W, t: &Trajectory) -> std::io::Result<()> {
    put_u64(w, t.seed.map_or(0, |_| 1))?;
    put_u64(w, t.seed.unwrap_or(0))?;
    put_u64(w, t.start_cell.map_or(u64::MAX, |c| c as u64))?;
    put_points(w, std::slice::from_ref(&t.start))?;
    put_points(w, &t.states)?;
    put_points(w, &t.actions)?;
    match t.exit {
        Exit::None => put_u64(w, u64::MAX)?,
        Exit::Unsafe(f) => put_u64(w, (f.axis as u64) << 1 | f.upper as u64)?,
    }
    put_u64(w, t.truncations as u64)
}

fn get_u64<R: Read>(r: &mut R) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn get_points<R: Read>(r: &mut R) -> std::io::Result<Vec<Vec<f64>>> {
    let n = get_u64(r)? as usize;
    let d = get_u64(r)? as usize;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut p = Vec::with_capacity(d);
        for _ in 0..d {
            p.push(f64::from_bits(get_u64(r)?));
        }
        out.push(p);
    }
    Ok(out)
}

fn decode<R: Read>(r: &mut R) -> std::io::Result<Trajectory> {
    let has_seed = get_u64(r)? == 1;
    let seed = get_u64(r)?;
    let cell = get_u64(r)?;
    let start = get_points(r)?.pop().unwrap_or_default();
    let states = get_points(r)?;
    let actions = get_points(r)?;
    let exit = match get_u64(r)? {
        u64::MAX => Exit::None,
        v => Exit::Unsafe(Facet { axis: (v >> 1) as usize, upper: v & 1 == 1 }),
    };
    let truncations = get_u64(r)? as usize;
    Ok(Trajectory {
        seed: has_seed.then_some(seed),
        start,
        start_cell: (cell != u64::MAX).then_some(cell as usize),
        states,
        actions,
        exit,
        truncations,
    })
}
