// Element matrices for axis-aligned linear elements on structured grids.

const GAUSS2: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];

/// Local node signs of the bilinear quad, counter-clockwise from (-,-).
pub(crate) const QUAD_NODES: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];

/// Local node signs of the trilinear hexahedron; bottom quad then top quad.
pub(crate) const HEX_NODES: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
];

/// Conduction matrix `λ t ∫ ∇N·∇Nᵀ dA` of an `hx × hy` quad of thickness `t`.
pub(crate) fn quad_conduction(hx: f64, hy: f64, lambda_t: f64) -> [[f64; 4]; 4] {
    let mut k = [[0.0; 4]; 4];
    let det = hx * hy / 4.0;
    for &xi in &GAUSS2 {
        for &eta in &GAUSS2 {
            let mut g = [[0.0; 2]; 4];
            for (a, s) in QUAD_NODES.iter().enumerate() {
                g[a][0] = s[0] * (1.0 + s[1] * eta) / 4.0 * (2.0 / hx);
                g[a][1] = s[1] * (1.0 + s[0] * xi) / 4.0 * (2.0 / hy);
            }
            for a in 0..4 {
                for b in 0..4 {
                    k[a][b] += lambda_t * (g[a][0] * g[b][0] + g[a][1] * g[b][1]) * det;
                }
            }
        }
    }
    k
}

/// Consistent mass-type matrix `c ∫ N Nᵀ dA` of a quad.
pub(crate) fn quad_mass(hx: f64, hy: f64, c: f64) -> [[f64; 4]; 4] {
    let mut m = [[0.0; 4]; 4];
    let det = hx * hy / 4.0;
    for &xi in &GAUSS2 {
        for &eta in &GAUSS2 {
            let n: Vec<f64> = QUAD_NODES
                .iter()
                .map(|s| (1.0 + s[0] * xi) * (1.0 + s[1] * eta) / 4.0)
                .collect();
            for a in 0..4 {
                for b in 0..4 {
                    m[a][b] += n[a] * n[b] * (c * det);
                }
            }
        }
    }
    m
}

pub(crate) struct HexQuadPoint {
    pub n: [f64; 8],
    /// physical gradients dN/dx, dN/dy, dN/dz
    pub grad: [[f64; 3]; 8],
    pub weight: f64,
}

pub(crate) fn hex_quadrature(h: [f64; 3]) -> Vec<HexQuadPoint> {
    let det = h[0] * h[1] * h[2] / 8.0;
    let mut pts = Vec::with_capacity(8);
    for &z in &GAUSS2 {
        for &y in &GAUSS2 {
            for &x in &GAUSS2 {
                let p = [x, y, z];
                let mut n = [0.0; 8];
                let mut grad = [[0.0; 3]; 8];
                for (a, s) in HEX_NODES.iter().enumerate() {
                    let f = [1.0 + s[0] * p[0], 1.0 + s[1] * p[1], 1.0 + s[2] * p[2]];
                    n[a] = f[0] * f[1] * f[2] / 8.0;
                    grad[a][0] = s[0] * f[1] * f[2] / 8.0 * (2.0 / h[0]);
                    grad[a][1] = f[0] * s[1] * f[2] / 8.0 * (2.0 / h[1]);
                    grad[a][2] = f[0] * f[1] * s[2] / 8.0 * (2.0 / h[2]);
                }
                pts.push(HexQuadPoint { n, grad, weight: det });
            }
        }
    }
    pts
}

pub(crate) fn hex_conduction(h: [f64; 3], lambda: f64) -> [[f64; 8]; 8] {
    let mut k = [[0.0; 8]; 8];
    for q in hex_quadrature(h) {
        for a in 0..8 {
            for b in 0..8 {
                let dot: f64 = (0..3).map(|d| q.grad[a][d] * q.grad[b][d]).sum();
                k[a][b] += lambda * dot * q.weight;
            }
        }
    }
    k
}

pub(crate) fn hex_mass(h: [f64; 3], c: f64) -> [[f64; 8]; 8] {
    let mut m = [[0.0; 8]; 8];
    for q in hex_quadrature(h) {
        for a in 0..8 {
            for b in 0..8 {
                m[a][b] += q.n[a] * q.n[b] * (c * q.weight);
            }
        }
    }
    m
}

/// Strain-displacement rows (Voigt order xx, yy, zz, xy, yz, xz) for node gradient `g`.
fn strain_rows(g: [f64; 3]) -> [[f64; 3]; 6] {
    [
        [g[0], 0.0, 0.0],
        [0.0, g[1], 0.0],
        [0.0, 0.0, g[2]],
        [g[1], g[0], 0.0],
        [0.0, g[2], g[1]],
        [g[2], 0.0, g[0]],
    ]
}

pub(crate) fn isotropic_elasticity(young: f64, poisson: f64) -> [[f64; 6]; 6] {
    let lam = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
    let mu = young / (2.0 * (1.0 + poisson));
    let mut d = [[0.0; 6]; 6];
    for i in 0..3 {
        for j in 0..3 {
            d[i][j] = lam;
        }
        d[i][i] += 2.0 * mu;
        d[i + 3][i + 3] = mu;
    }
    d
}

/// Stiffness (24×24, dof order node-major xyz) and thermal coupling (24×8) of a brick.
/// The coupling maps nodal temperature deviations to equivalent nodal forces
/// `∫ Bᵀ D (α m) Nᵀ dV` with `m = (1,1,1,0,0,0)`.
pub(crate) fn hex_elasticity(h: [f64; 3], young: f64, poisson: f64, alpha: f64) -> (Vec<[f64; 24]>, Vec<[f64; 8]>) {
    let d = isotropic_elasticity(young, poisson);
    let dm: Vec<f64> = (0..6).map(|i| (0..3).map(|j| d[i][j]).sum::<f64>() * alpha).collect();
    let mut k = vec![[0.0; 24]; 24];
    let mut kth = vec![[0.0; 8]; 24];
    for q in hex_quadrature(h) {
        let rows: Vec<[[f64; 3]; 6]> = (0..8).map(|a| strain_rows(q.grad[a])).collect();
        for a in 0..8 {
            for i in 0..3 {
                // DB for column (b, j) contracted against B(a, i)
                for b in 0..8 {
                    for j in 0..3 {
                        let mut s = 0.0;
                        for p in 0..6 {
                            if rows[a][p][i] == 0.0 {
                                continue;
                            }
                            let mut db = 0.0;
                            for r in 0..6 {
                                db += d[p][r] * rows[b][r][j];
                            }
                            s += rows[a][p][i] * db;
                        }
                        k[3 * a + i][3 * b + j] += s * q.weight;
                    }
                }
                let bt_dm: f64 = (0..6).map(|p| rows[a][p][i] * dm[p]).sum();
                for t in 0..8 {
                    kth[3 * a + i][t] += bt_dm * q.n[t] * q.weight;
                }
            }
        }
    }
    for i in 0..24 {
        for j in i + 1..24 {
            let v = 0.5 * (k[i][j] + k[j][i]);
            k[i][j] = v;
            k[j][i] = v;
        }
    }
    (k, kth)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_conduction_rows_sum_to_zero_and_mass_integrates_volume() {
        let h = [0.1, 0.2, 0.3];
        let k = hex_conduction(h, 2.0);
        for row in &k {
            assert!(row.iter().sum::<f64>().abs() < 1e-12);
        }
        let m = hex_mass(h, 1.0);
        let total: f64 = m.iter().flatten().sum();
        assert!((total - 0.006).abs() < 1e-15);
    }

    #[test]
    fn quad_conduction_of_unit_square_matches_closed_form() {
        // closed form for a unit square: [4,-1,-2,-1]/6 pattern
        let k = quad_conduction(1.0, 1.0, 1.0);
        let expected = [4.0, -1.0, -2.0, -1.0];
        for a in 0..4 {
            for b in 0..4 {
                let e = expected[(b + 4 - a) % 4] / 6.0;
                assert!((k[a][b] - e).abs() < 1e-14, "{a},{b}");
            }
        }
    }

    #[test]
    fn rigid_translation_produces_no_elastic_force() {
        let (k, kth) = hex_elasticity([0.1, 0.1, 0.2], 2e11, 0.3, 1e-5);
        for axis in 0..3 {
            for i in 0..24 {
                let f: f64 = (0..8).map(|a| k[i][3 * a + axis]).sum();
                assert!(f.abs() < 1e-3, "translation force {f}");
            }
        }
        // uniform heating gives self-equilibrated nodal forces
        for i in 0..3 {
            let f: f64 = (0..8).map(|a| kth[3 * a + i].iter().sum::<f64>()).sum();
            assert!(f.abs() < 1e-3);
        }
    }
}
