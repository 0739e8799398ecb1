//! Vertex enumeration and exact volume for dimensions 1-3.

use super::Halfspace;

const VERTEX_SLACK: f64 = 1e-7;
const DEDUP_TOL: f64 = 1e-9;

fn satisfies_all(hs: &[Halfspace], x: &[f64]) -> bool {
    hs.iter().all(|h| {
        let dot: f64 = h.normal.iter().zip(x).map(|(a, b)| a * b).sum();
        dot <= h.offset + VERTEX_SLACK
    })
}

fn push_dedup(verts: &mut Vec<Vec<f64>>, v: Vec<f64>) {
    let dup = verts.iter().any(|w| {
        w.iter()
            .zip(&v)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
            < DEDUP_TOL
    });
    if !dup {
        verts.push(v);
    }
}

/// All vertices of a bounded feasible halfspace system, dim <= 3.
pub(crate) fn enumerate_vertices(dim: usize, hs: &[Halfspace]) -> Vec<Vec<f64>> {
    let mut verts: Vec<Vec<f64>> = Vec::new();
    match dim {
        1 => {
            let mut lo = f64::NEG_INFINITY;
            let mut hi = f64::INFINITY;
            for h in hs {
                let n = h.normal[0];
                if n > 1e-12 {
                    hi = hi.min(h.offset / n);
                } else if n < -1e-12 {
                    lo = lo.max(h.offset / n);
                }
            }
            if lo.is_finite() && hi.is_finite() && lo <= hi + VERTEX_SLACK {
                push_dedup(&mut verts, vec![lo]);
                push_dedup(&mut verts, vec![hi]);
            }
        }
        2 => {
            for i in 0..hs.len() {
                for j in (i + 1)..hs.len() {
                    let (a, b) = (&hs[i], &hs[j]);
                    let det = a.normal[0] * b.normal[1] - a.normal[1] * b.normal[0];
                    if det.abs() < 1e-12 {
                        continue;
                    }
                    let x = (a.offset * b.normal[1] - b.offset * a.normal[1]) / det;
                    let y = (a.normal[0] * b.offset - b.normal[0] * a.offset) / det;
                    let v = vec![x, y];
                    if satisfies_all(hs, &v) {
                        push_dedup(&mut verts, v);
                    }
                }
            }
        }
        3 => {
            for i in 0..hs.len() {
                for j in (i + 1)..hs.len() {
                    for k in (j + 1)..hs.len() {
                        let m = nalgebra::Matrix3::from_rows(&[
                            nalgebra::RowVector3::from_row_slice(&hs[i].normal),
                            nalgebra::RowVector3::from_row_slice(&hs[j].normal),
                            nalgebra::RowVector3::from_row_slice(&hs[k].normal),
                        ]);
                        if m.determinant().abs() < 1e-12 {
                            continue;
                        }
                        let rhs =
                            nalgebra::Vector3::new(hs[i].offset, hs[j].offset, hs[k].offset);
                        if let Some(sol) = m.lu().solve(&rhs) {
                            let v = vec![sol[0], sol[1], sol[2]];
                            if satisfies_all(hs, &v) {
                                push_dedup(&mut verts, v);
                            }
                        }
                    }
                }
            }
        }
        _ => {}
    }
    verts
}

pub(crate) fn volume_1d(verts: &[Vec<f64>]) -> f64 {
    if verts.len() < 2 {
        return 0.0;
    }
    let lo = verts.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
    let hi = verts.iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max);
    (hi - lo).max(0.0)
}

fn angular_order(verts: &[Vec<f64>], cx: f64, cy: f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..verts.len()).collect();
    idx.sort_by(|&a, &b| {
        let ta = (verts[a][1] - cy).atan2(verts[a][0] - cx);
        let tb = (verts[b][1] - cy).atan2(verts[b][0] - cx);
        ta.partial_cmp(&tb).unwrap_or(std::cmp::Ordering::Equal)
    });
    idx
}

pub(crate) fn volume_2d(verts: &[Vec<f64>]) -> f64 {
    if verts.len() < 3 {
        return 0.0;
    }
    let cx = verts.iter().map(|v| v[0]).sum::<f64>() / verts.len() as f64;
    let cy = verts.iter().map(|v| v[1]).sum::<f64>() / verts.len() as f64;
    let order = angular_order(verts, cx, cy);
    let mut area2 = 0.0;
    for w in 0..order.len() {
        let a = &verts[order[w]];
        let b = &verts[order[(w + 1) % order.len()]];
        area2 += a[0] * b[1] - b[0] * a[1];
    }
    area2.abs() / 2.0
}

/// Convex 3D volume: triangulate each supporting face and sum tetrahedra
/// with apex at the vertex centroid (interior for convex bodies).
pub(crate) fn volume_3d(hs: &[Halfspace], verts: &[Vec<f64>]) -> f64 {
    if verts.len() < 4 {
        return 0.0;
    }
    let n = verts.len() as f64;
    let o = [
        verts.iter().map(|v| v[0]).sum::<f64>() / n,
        verts.iter().map(|v| v[1]).sum::<f64>() / n,
        verts.iter().map(|v| v[2]).sum::<f64>() / n,
    ];
    let mut total = 0.0;
    for h in hs {
        let norm = (h.normal.iter().map(|x| x * x).sum::<f64>()).sqrt();
        if norm < 1e-12 {
            continue;
        }
        let face: Vec<&Vec<f64>> = verts
            .iter()
            .filter(|v| {
                let dot: f64 = h.normal.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
                (dot - h.offset).abs() / norm < VERTEX_SLACK
            })
            .collect();
        if face.len() < 3 {
            continue;
        }
        // orthonormal in-plane basis
        let nh = [h.normal[0] / norm, h.normal[1] / norm, h.normal[2] / norm];
        let pick = if nh[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        let mut u = cross(&nh, &pick);
        let ul = (u.iter().map(|x| x * x).sum::<f64>()).sqrt();
        u.iter_mut().for_each(|x| *x /= ul);
        let w = cross(&nh, &u);
        let fc = [
            face.iter().map(|v| v[0]).sum::<f64>() / face.len() as f64,
            face.iter().map(|v| v[1]).sum::<f64>() / face.len() as f64,
            face.iter().map(|v| v[2]).sum::<f64>() / face.len() as f64,
        ];
        let mut order: Vec<usize> = (0..face.len()).collect();
        order.sort_by(|&a, &b| {
            let pa = angle_in_plane(face[a], &fc, &u, &w);
            let pb = angle_in_plane(face[b], &fc, &u, &w);
            pa.partial_cmp(&pb).unwrap_or(std::cmp::Ordering::Equal)
        });
        for t in 1..(order.len() - 1) {
            let a = face[order[0]];
            let b = face[order[t]];
            let c = face[order[t + 1]];
            total += tet_volume(&o, a, b, c);
        }
    }
    total
}

fn cross(a: &[f64; 3], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn angle_in_plane(v: &[f64], c: &[f64; 3], u: &[f64; 3], w: &[f64; 3]) -> f64 {
    let d = [v[0] - c[0], v[1] - c[1], v[2] - c[2]];
    let pu: f64 = d.iter().zip(u).map(|(a, b)| a * b).sum();
    let pw: f64 = d.iter().zip(w).map(|(a, b)| a * b).sum();
    pw.atan2(pu)
}

fn tet_volume(o: &[f64; 3], a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let ea = [a[0] - o[0], a[1] - o[1], a[2] - o[2]];
    let eb = [b[0] - o[0], b[1] - o[1], b[2] - o[2]];
    let ec = [c[0] - o[0], c[1] - o[1], c[2] - o[2]];
    let det = ea[0] * (eb[1] * ec[2] - eb[2] * ec[1])
        - ea[1] * (eb[0] * ec[2] - eb[2] * ec[0])
        + ea[2] * (eb[0] * ec[1] - eb[1] * ec[0]);
    det.abs() / 6.0
}
