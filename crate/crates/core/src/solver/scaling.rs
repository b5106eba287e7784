//! Ruiz equilibration of the KKT data.

use super::csc::{inf_norm, Csc};

const MIN_SCALE: f64 = 1e-4;
const MAX_SCALE: f64 = 1e4;

/// Scaled problem `min c (½ x̃ᵀ D P D x̃ + qᵀ D x̃)` with rows of `A` and `G`
/// multiplied by `e_eq` and `e_in`; the original variables are `x = D x̃`.
#[derive(Debug, Clone)]
pub(crate) struct Scaling {
    pub d: Vec<f64>,
    pub e_eq: Vec<f64>,
    pub e_in: Vec<f64>,
    pub cost: f64,
}

impl Scaling {
    pub fn identity(n: usize, p: usize, m: usize) -> Self {
        Scaling {
            d: vec![1.0; n],
            e_eq: vec![1.0; p],
            e_in: vec![1.0; m],
            cost: 1.0,
        }
    }
}

fn inv_sqrt(norm: f64) -> f64 {
    if norm < MIN_SCALE {
        1.0
    } else {
        (1.0 / norm.sqrt()).clamp(MIN_SCALE, MAX_SCALE)
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn equilibrate(
    p: &mut Csc,
    q: &mut [f64],
    a: &mut Csc,
    b: &mut [f64],
    g: &mut Csc,
    h: &mut [f64],
    passes: usize,
) -> Scaling {
    let (n, m_eq, m_in) = (q.len(), b.len(), h.len());
    let mut s = Scaling::identity(n, m_eq, m_in);
    for _ in 0..passes {
        let pn = p.col_norms();
        let an = a.col_norms();
        let gn = g.col_norms();
        let dv: Vec<f64> = (0..n)
            .map(|j| inv_sqrt(pn[j].max(an[j]).max(gn[j])))
            .collect();
        let ea: Vec<f64> = a.row_norms().into_iter().map(inv_sqrt).collect();
        let eg: Vec<f64> = g.row_norms().into_iter().map(inv_sqrt).collect();
        p.scale(&dv, &dv);
        a.scale(&ea, &dv);
        g.scale(&eg, &dv);
        for j in 0..n {
            q[j] *= dv[j];
            s.d[j] *= dv[j];
        }
        for i in 0..m_eq {
            b[i] *= ea[i];
            s.e_eq[i] *= ea[i];
        }
        for i in 0..m_in {
            h[i] *= eg[i];
            s.e_in[i] *= eg[i];
        }
    }
    let pn = p.col_norms();
    let mean_p = if n > 0 { pn.iter().sum::<f64>() / n as f64 } else { 0.0 };
    let scale_ref = mean_p.max(inf_norm(q));
    let cost = if scale_ref < MIN_SCALE {
        1.0
    } else {
        (1.0 / scale_ref).clamp(MIN_SCALE, MAX_SCALE)
    };
    p.vals.iter_mut().for_each(|v| *v *= cost);
    q.iter_mut().for_each(|v| *v *= cost);
    s.cost = cost;
    s
}
