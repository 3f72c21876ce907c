//! Two-dimensional Sobol sequence with Cranley-Patterson shifts.

const BITS: usize = 32;
const SCALE: f64 = 1.0 / 4294967296.0;

fn directions() -> [[u32; BITS]; 2] {
    let mut v = [[0u32; BITS]; 2];
    for k in 0..BITS {
        v[0][k] = 1u32 << (31 - k);
    }
    v[1][0] = 1u32 << 31;
    for k in 1..BITS {
        v[1][k] = v[1][k - 1] ^ (v[1][k - 1] >> 1);
    }
    v
}

/// Gray-code Sobol generator over `[0,1)²`, starting at the origin.
pub struct Sobol2 {
    v: [[u32; BITS]; 2],
    x: [u32; 2],
    index: u64,
}

impl Default for Sobol2 {
    fn default() -> Self {
        Self::new()
    }
}

impl Sobol2 {
    pub fn new() -> Self {
        Self {
            v: directions(),
            x: [0, 0],
            index: 0,
        }
    }
}

impl Iterator for Sobol2 {
    type Item = [f64; 2];

    fn next(&mut self) -> Option<[f64; 2]> {
        let out = [self.x[0] as f64 * SCALE, self.x[1] as f64 * SCALE];
        let c = (!self.index).trailing_zeros() as usize;
        if c < BITS {
            self.x[0] ^= self.v[0][c];
            self.x[1] ^= self.v[1][c];
        }
        self.index += 1;
        Some(out)
    }
}

/// Adds `shift` modulo 1 in each coordinate.
pub fn rotate(p: [f64; 2], shift: [f64; 2]) -> [f64; 2] {
    let f = |x: f64, s: f64| {
        let y = x + s;
        if y >= 1.0 {
            y - 1.0
        } else {
            y
        }
    };
    [f(p[0], shift[0]), f(p[1], shift[1])]
}
