//! Word-parallel evaluation of the growth rules.

use super::{Lattice, ModelSpec, Variant};

/// `dst[x] = src[x + d]`, zero where `x + d` leaves the row.
fn shift_row(src: &[u64], d: isize, tail: u64, dst: &mut [u64]) {
    let n = src.len();
    let q = (d.unsigned_abs() / 64) as isize;
    let r = (d.unsigned_abs() % 64) as u32;
    let at = |i: isize| if i >= 0 && (i as usize) < n { src[i as usize] } else { 0 };
    for (i, out) in dst.iter_mut().enumerate() {
        let i = i as isize;
        *out = if d >= 0 {
            let lo = at(i + q) >> r;
            let hi = if r == 0 { 0 } else { at(i + q + 1) << (64 - r) };
            lo | hi
        } else {
            let hi = at(i - q) << r;
            let lo = if r == 0 { 0 } else { at(i - q - 1) >> (64 - r) };
            hi | lo
        };
    }
    if let Some(last) = dst.last_mut() {
        *last &= tail;
    }
}

/// Bit-sliced per-cell counters for one row.
struct Counter {
    planes: Vec<Vec<u64>>,
}

impl Counter {
    fn new(max: usize, words: usize) -> Self {
        let bits = (usize::BITS - max.leading_zeros()).max(1) as usize;
        Counter {
            planes: vec![vec![0; words]; bits],
        }
    }

    fn clear(&mut self) {
        for p in &mut self.planes {
            p.fill(0);
        }
    }

    fn add(&mut self, x: &[u64]) {
        for (i, &xi) in x.iter().enumerate() {
            let mut carry = xi;
            for p in &mut self.planes {
                if carry == 0 {
                    break;
                }
                let t = p[i] & carry;
                p[i] ^= carry;
                carry = t;
            }
        }
    }

    /// Cells whose count is at least `k`.
    fn at_least(&self, k: usize, out: &mut [u64]) {
        let bits = self.planes.len();
        if k >= 1 << bits {
            out.fill(0);
            return;
        }
        for (i, o) in out.iter_mut().enumerate() {
            let mut gt = 0u64;
            let mut eq = u64::MAX;
            for b in (0..bits).rev() {
                let c = self.planes[b][i];
                if k >> b & 1 == 1 {
                    eq &= c;
                } else {
                    gt |= eq & c;
                    eq &= !c;
                }
            }
            *o = gt | eq;
        }
    }
}

/// Cells that become active in the next synchronous generation.
pub(super) fn new_activations(lattice: &Lattice, spec: &ModelSpec) -> Vec<u64> {
    let words = lattice.words;
    let height = lattice.height;
    let tail = lattice.tail_mask();
    let row = |plane: &[u64], y: usize| -> Vec<u64> { plane[y * words..(y + 1) * words].to_vec() };
    let k = spec.k as usize;
    let mut fresh = vec![0u64; words * height];

    // horizontal dilations h[r][y] = OR_{|dx| <= r} A(x + dx, y)
    let reach = match spec.variant {
        Variant::LocalK => k,
        Variant::LocalModified | Variant::LocalFrobose => 1,
        Variant::GlobalK => 0,
    };
    let mut h: Vec<Vec<Vec<u64>>> = Vec::with_capacity(reach + 1);
    let mut tmp = vec![0u64; words];
    h.push((0..height).map(|y| row(&lattice.active, y)).collect());
    for r in 1..=reach {
        let prev = &h[r - 1];
        let mut level = Vec::with_capacity(height);
        for (y, base) in prev.iter().enumerate() {
            let a = &h[0][y];
            let mut out = base.clone();
            shift_row(a, r as isize, tail, &mut tmp);
            out.iter_mut().zip(&tmp).for_each(|(o, t)| *o |= t);
            shift_row(a, -(r as isize), tail, &mut tmp);
            out.iter_mut().zip(&tmp).for_each(|(o, t)| *o |= t);
            level.push(out);
        }
        h.push(level);
    }
    let a_row = |y: isize| -> Option<&Vec<u64>> {
        if y >= 0 && (y as usize) < height {
            Some(&h[0][y as usize])
        } else {
            None
        }
    };

    let mut counter = Counter::new(4 * k.saturating_sub(1), words);
    let mut ge = vec![0u64; words];
    let mut shifted = vec![0u64; words];
    for y in 0..height {
        let yi = y as isize;
        let occ = &lattice.occupied[y * words..(y + 1) * words];
        let act = &h[0][y];
        let empty: Vec<u64> = (0..words)
            .map(|i| !act[i] & !occ[i] & if i + 1 == words { tail } else { u64::MAX })
            .collect();
        let out = &mut fresh[y * words..(y + 1) * words];
        match spec.variant {
            Variant::GlobalK | Variant::LocalK => {
                counter.clear();
                for v in 1..k as isize {
                    shift_row(act, v, tail, &mut shifted);
                    counter.add(&shifted);
                    shift_row(act, -v, tail, &mut shifted);
                    counter.add(&shifted);
                    if let Some(r) = a_row(yi + v) {
                        counter.add(r);
                    }
                    if let Some(r) = a_row(yi - v) {
                        counter.add(r);
                    }
                }
                counter.at_least(k, &mut ge);
                if spec.variant == Variant::GlobalK {
                    // every inactive cell is empty in the global model
                    for i in 0..words {
                        out[i] = ge[i] & !act[i] & if i + 1 == words { tail } else { u64::MAX };
                    }
                } else {
                    let mut near = vec![0u64; words];
                    for dy in -(k as isize)..=(k as isize) {
                        let yy = yi + dy;
                        if yy < 0 || yy as usize >= height {
                            continue;
                        }
                        let level = &h[k - dy.unsigned_abs()][yy as usize];
                        near.iter_mut().zip(level).for_each(|(n, l)| *n |= l);
                    }
                    for i in 0..words {
                        out[i] = (occ[i] & near[i]) | (empty[i] & ge[i]);
                    }
                }
            }
            Variant::LocalModified | Variant::LocalFrobose => {
                let zero = vec![0u64; words];
                let up = a_row(yi + 1).unwrap_or(&zero);
                let down = a_row(yi - 1).unwrap_or(&zero);
                let mut right = vec![0u64; words];
                let mut left = vec![0u64; words];
                shift_row(act, 1, tail, &mut right);
                shift_row(act, -1, tail, &mut left);
                let mut near = vec![0u64; words];
                if spec.variant == Variant::LocalModified {
                    // 3x3 box: horizontal dilation of the three rows
                    for dy in -1..=1isize {
                        let yy = yi + dy;
                        if yy >= 0 && (yy as usize) < height {
                            near.iter_mut().zip(&h[1][yy as usize]).for_each(|(n, l)| *n |= l);
                        }
                    }
                    for i in 0..words {
                        let vert = up[i] | down[i];
                        let horiz = left[i] | right[i];
                        out[i] = (occ[i] & near[i]) | (empty[i] & vert & horiz);
                    }
                } else {
                    let mut ur = vec![0u64; words];
                    let mut ul = vec![0u64; words];
                    let mut dr = vec![0u64; words];
                    let mut dl = vec![0u64; words];
                    shift_row(up, 1, tail, &mut ur);
                    shift_row(up, -1, tail, &mut ul);
                    shift_row(down, 1, tail, &mut dr);
                    shift_row(down, -1, tail, &mut dl);
                    for i in 0..words {
                        near[i] = up[i] | down[i] | left[i] | right[i];
                        let corner = (up[i] & right[i] & ur[i])
                            | (up[i] & left[i] & ul[i])
                            | (down[i] & right[i] & dr[i])
                            | (down[i] & left[i] & dl[i]);
                        out[i] = (occ[i] & near[i]) | (empty[i] & corner);
                    }
                }
            }
        }
    }
    fresh
}
