use std::io::{self, BufRead, Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SimError;

const MAGIC: &str = "STENCILGRID";
const VERSION: &str = "v1";

/// Row-major float32 grid of 2 or 3 dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    extents: Vec<usize>,
    data: Vec<f32>,
}

impl Grid {
    pub fn new(extents: &[usize], data: Vec<f32>) -> Result<Self, SimError> {
        if !(2..=3).contains(&extents.len()) {
            return Err(SimError::Grid(format!("grids have 2 or 3 dimensions, got {}", extents.len())));
        }
        let len: usize = extents.iter().product();
        if data.len() != len {
            return Err(SimError::Grid(format!("extents {extents:?} need {len} cells, got {}", data.len())));
        }
        Ok(Grid { extents: extents.to_vec(), data })
    }

    pub fn zeros(extents: &[usize]) -> Result<Self, SimError> {
        Grid::new(extents, vec![0.0; extents.iter().product()])
    }

    /// Uniform values in [-1, 1) from a seeded ChaCha stream.
    pub fn random(extents: &[usize], seed: u64) -> Result<Self, SimError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = extents.iter().product();
        Grid::new(extents, (0..len).map(|_| rng.random_range(-1.0f32..1.0)).collect())
    }

    pub fn from_fn(extents: &[usize], f: impl Fn(&[usize]) -> f32) -> Result<Self, SimError> {
        let len: usize = extents.iter().product();
        let mut idx = vec![0usize; extents.len()];
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f(&idx));
            for d in (0..extents.len()).rev() {
                idx[d] += 1;
                if idx[d] < extents[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        Grid::new(extents, data)
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn rows(&self) -> usize {
        self.extents[0]
    }

    /// Cells per leading-dimension row.
    pub fn row_len(&self) -> usize {
        self.extents[1..].iter().product()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn row_slice(&self, lo: usize, hi: usize) -> &[f32] {
        let c = self.row_len();
        &self.data[lo * c..hi * c]
    }

    pub fn linear_index(&self, index: &[usize]) -> usize {
        index.iter().zip(&self.extents).fold(0, |acc, (&i, &e)| acc * e + i)
    }

    pub fn get(&self, index: &[usize]) -> f32 {
        self.data[self.linear_index(index)]
    }

    /// Bitwise equality, so NaN payloads and signed zeros count.
    pub fn bit_identical(&self, other: &Grid) -> bool {
        self.extents == other.extents && self.data.iter().zip(&other.data).all(|(a, b)| a.to_bits() == b.to_bits())
    }

    /// Number of cells whose bits differ.
    pub fn mismatches(&self, other: &Grid) -> usize {
        if self.extents != other.extents {
            return self.data.len().max(other.data.len());
        }
        self.data.iter().zip(&other.data).filter(|(a, b)| a.to_bits() != b.to_bits()).count()
    }

    /// Header line `STENCILGRID v1 <e1> <e2> [<e3>]` followed by raw
    /// little-endian cells.
    pub fn write_binary(&self, mut w: impl Write) -> io::Result<()> {
        let dims: Vec<String> = self.extents.iter().map(|e| e.to_string()).collect();
        writeln!(w, "{MAGIC} {VERSION} {}", dims.join(" "))?;
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(r: impl Read) -> Result<Self, SimError> {
        let mut r = io::BufReader::new(r);
        let mut header = String::new();
        r.read_line(&mut header).map_err(|e| SimError::Grid(e.to_string()))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some(MAGIC) || parts.next() != Some(VERSION) {
            return Err(SimError::Grid(format!("missing `{MAGIC} {VERSION}` header")));
        }
        let extents = parts
            .map(|p| p.parse::<usize>().map_err(|_| SimError::Grid(format!("bad extent `{p}` in header"))))
            .collect::<Result<Vec<_>, _>>()?;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes).map_err(|e| SimError::Grid(e.to_string()))?;
        if bytes.len() % 4 != 0 {
            return Err(SimError::Grid(format!("payload of {} bytes is not a whole number of cells", bytes.len())));
        }
        let data = bytes.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect();
        Grid::new(&extents, data)
    }

    /// One line per row, comma-separated. `extents` reshapes the result
    /// (for 3-D grids stored with trailing dimensions folded into columns).
    pub fn from_csv(text: &str, extents: Option<&[usize]>) -> Result<Self, SimError> {
        let mut data = Vec::new();
        let mut shape = (0usize, None::<usize>);
        for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let row = line
                .split(',')
                .map(|v| v.trim().parse::<f32>().map_err(|_| SimError::Grid(format!("line {}: bad value `{}`", n + 1, v.trim()))))
                .collect::<Result<Vec<_>, _>>()?;
            match shape.1 {
                Some(c) if c != row.len() => {
                    return Err(SimError::Grid(format!("line {}: {} values, expected {c}", n + 1, row.len())));
                }
                _ => shape.1 = Some(row.len()),
            }
            shape.0 += 1;
            data.extend(row);
        }
        let flat = [shape.0, shape.1.unwrap_or(0)];
        Grid::new(extents.unwrap_or(&flat), data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip() {
        let g = Grid::random(&[4, 3, 2], 7).unwrap();
        let mut bytes = Vec::new();
        g.write_binary(&mut bytes).unwrap();
        assert!(bytes.starts_with(b"STENCILGRID v1 4 3 2\n"));
        assert_eq!(Grid::read_binary(bytes.as_slice()).unwrap(), g);
        assert!(Grid::read_binary(&b"GRID 4 4\n"[..]).is_err());
    }

    #[test]
    fn csv_import() {
        let g = Grid::from_csv("1, 2, 3\n4,5,6\n\n", None).unwrap();
        assert_eq!(g.extents(), &[2, 3]);
        assert_eq!(g.get(&[1, 2]), 6.0);
        let g3 = Grid::from_csv("1,2,3,4\n5,6,7,8\n9,10,11,12\n", Some(&[3, 2, 2])).unwrap();
        assert_eq!(g3.get(&[2, 1, 0]), 11.0);
        assert!(Grid::from_csv("1,2\n3\n", None).is_err());
    }

    #[test]
    fn seeded_grids_repeat() {
        assert_eq!(Grid::random(&[8, 8], 1).unwrap(), Grid::random(&[8, 8], 1).unwrap());
        assert_ne!(Grid::random(&[8, 8], 1).unwrap(), Grid::random(&[8, 8], 2).unwrap());
        let g = Grid::from_fn(&[2, 3], |i| (i[0] * 3 + i[1]) as f32).unwrap();
        assert_eq!(g.data(), &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
    }
}
