//! Reference implementations shared by the integration tests. Nothing here
//! calls into the crate's angular-momentum code.

#![allow(dead_code)]

use std::collections::HashMap;

use ergdvo::angular::HalfInt;

/// Clebsch–Gordan coefficients `⟨j1 m1 j2 m2 | J M⟩` obtained by repeated
/// application of `J₋` to highest-weight states, with Gram–Schmidt for lower
/// `J` and the Condon–Shortley phase `⟨j1 j1 j2 (J−j1) | J J⟩ > 0`.
/// All arguments are twice the physical value.
pub struct ClebschGordan {
    j1: i32,
    j2: i32,
    /// (J, M) -> coefficients indexed by (m1, m2)
    states: HashMap<(i32, i32), HashMap<(i32, i32), f64>>,
}

fn lower_factor(j: i32, m: i32) -> f64 {
    // J₋|j m⟩ = √((j+m)(j−m+1)) |j m−1⟩ with physical j, m.
    let (j, m) = (j as f64 / 2.0, m as f64 / 2.0);
    ((j + m) * (j - m + 1.0)).max(0.0).sqrt()
}

type Vector = HashMap<(i32, i32), f64>;

fn lower(j1: i32, j2: i32, v: &Vector) -> Vector {
    let mut out = Vector::new();
    for (&(m1, m2), &c) in v {
        if m1 > -j1 {
            *out.entry((m1 - 2, m2)).or_default() += c * lower_factor(j1, m1);
        }
        if m2 > -j2 {
            *out.entry((m1, m2 - 2)).or_default() += c * lower_factor(j2, m2);
        }
    }
    out
}

fn dot(a: &Vector, b: &Vector) -> f64 {
    a.iter().map(|(k, x)| x * b.get(k).copied().unwrap_or(0.0)).sum()
}

fn normalize(v: &mut Vector) {
    let n = dot(v, v).sqrt();
    for x in v.values_mut() {
        *x /= n;
    }
}

impl ClebschGordan {
    pub fn new(j1: i32, j2: i32) -> Self {
        let mut states: HashMap<(i32, i32), Vector> = HashMap::new();
        let jmax = j1 + j2;
        let jmin = (j1 - j2).abs();
        let mut big_j = jmax;
        while big_j >= jmin {
            // Highest weight |J J⟩ orthogonal to all higher-J states with M = J.
            let m = big_j;
            let mut basis: Vec<(i32, i32)> = Vec::new();
            let mut m1 = j1;
            while m1 >= -j1 {
                let m2 = m - m1;
                if m2.abs() <= j2 && (j2 - m2) % 2 == 0 {
                    basis.push((m1, m2));
                }
                m1 -= 2;
            }
            let higher: Vec<Vector> =
                states.iter().filter(|((jj, mm), _)| *mm == m && *jj > big_j).map(|(_, v)| v.clone()).collect();
            let mut top = None;
            for &b in &basis {
                let mut v: Vector = Vector::new();
                v.insert(b, 1.0);
                for h in &higher {
                    let p = dot(&v, h);
                    for (k, x) in h {
                        *v.entry(*k).or_default() -= p * x;
                    }
                }
                if dot(&v, &v) > 1e-12 {
                    normalize(&mut v);
                    top = Some(v);
                    break;
                }
            }
            let mut v = top.expect("highest weight exists");
            let key = (j1, big_j - j1);
            if v.get(&key).copied().unwrap_or(0.0) < 0.0 {
                for x in v.values_mut() {
                    *x = -*x;
                }
            }
            let mut mm = big_j;
            states.insert((big_j, mm), v.clone());
            while mm > -big_j {
                v = lower(j1, j2, &v);
                normalize(&mut v);
                mm -= 2;
                states.insert((big_j, mm), v.clone());
            }
            big_j -= 2;
        }
        ClebschGordan { j1, j2, states }
    }

    pub fn coefficient(&self, m1: i32, m2: i32, j: i32, m: i32) -> f64 {
        self.states.get(&(j, m)).and_then(|v| v.get(&(m1, m2))).copied().unwrap_or(0.0)
    }

    /// `(j1 j2 j3; m1 m2 m3)` from the coefficient table.
    pub fn three_j(&self, j3: i32, m1: i32, m2: i32, m3: i32) -> f64 {
        if m1 + m2 + m3 != 0 {
            return 0.0;
        }
        let phase_twice = self.j1 - self.j2 - m3;
        let sign = if (phase_twice / 2) % 2 == 0 { 1.0 } else { -1.0 };
        sign / ((j3 + 1) as f64).sqrt() * self.coefficient(m1, m2, j3, -m3)
    }
}

/// Cache of reference 3j symbols keyed by `(j1, j2)`.
#[derive(Default)]
pub struct ThreeJOracle {
    tables: HashMap<(i32, i32), ClebschGordan>,
}

impl ThreeJOracle {
    pub fn get(&mut self, j: [i32; 3], m: [i32; 3]) -> f64 {
        if !triangle(j[0], j[1], j[2]) || m.iter().zip(&j).any(|(mm, jj)| mm.abs() > *jj || (jj - mm) % 2 != 0) {
            return 0.0;
        }
        let table = self.tables.entry((j[0], j[1])).or_insert_with(|| ClebschGordan::new(j[0], j[1]));
        table.three_j(j[2], m[0], m[1], m[2])
    }

    /// Racah W-style 6j from a sum over products of four 3j symbols.
    pub fn six_j(&mut self, j: [i32; 6]) -> f64 {
        let [j1, j2, j3, j4, j5, j6] = j;
        if !(triangle(j1, j2, j3) && triangle(j1, j5, j6) && triangle(j4, j2, j6) && triangle(j4, j5, j3)) {
            return 0.0;
        }
        let mut total = 0.0;
        for m1 in proj(j1) {
            for m2 in proj(j2) {
                let m3 = -m1 - m2;
                if m3.abs() > j3 {
                    continue;
                }
                for m5 in proj(j5) {
                    let m6 = m5 - m1;
                    if m6.abs() > j6 {
                        continue;
                    }
                    let m4 = m6 - m2;
                    if m4.abs() > j4 || -m4 + m5 + m3 != 0 {
                        continue;
                    }
                    let s = (j1 - m1) + (j2 - m2) + (j3 - m3) + (j4 - m4) + (j5 - m5) + (j6 - m6);
                    let sign = if (s / 2) % 2 == 0 { 1.0 } else { -1.0 };
                    total += sign
                        * self.get([j1, j2, j3], [-m1, -m2, -m3])
                        * self.get([j1, j5, j6], [m1, -m5, m6])
                        * self.get([j4, j2, j6], [m4, m2, -m6])
                        * self.get([j4, j5, j3], [-m4, m5, m3]);
                }
            }
        }
        total
    }
}

pub fn triangle(a: i32, b: i32, c: i32) -> bool {
    c >= (a - b).abs() && c <= a + b && (a + b + c) % 2 == 0
}

/// Projections `j, j−2, …, −j` (twice values).
pub fn proj(j: i32) -> impl Iterator<Item = i32> {
    (0..=j).map(move |k| j - 2 * k)
}

pub fn h(twice: i32) -> HalfInt {
    HalfInt::from_twice(twice)
}
