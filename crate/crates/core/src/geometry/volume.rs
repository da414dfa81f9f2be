use super::BoxRegion;

/// Exact measure of a union of equal-radius ℓ∞ cells, each clipped to `domain`.
///
/// Slab sweep over the axes; consecutive slabs with the same active set share
/// one recursive evaluation.
pub fn union_volume<'a>(centers: impl Iterator<Item = &'a [f64]>, radius: f64, domain: &BoxRegion) -> f64 {
    let n = domain.dim();
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for c in centers {
        let mut empty = false;
        for i in 0..n {
            let a = (c[i] - radius).max(domain.lower()[i]);
            let b = (c[i] + radius).min(domain.upper()[i]);
            empty |= b <= a;
            lo.push(a);
            hi.push(b);
        }
        if empty {
            lo.truncate(lo.len() - n);
            hi.truncate(hi.len() - n);
        }
    }
    let m = lo.len() / n;
    let ids: Vec<usize> = (0..m).collect();
    measure(&lo, &hi, n, &ids, 0)
}

fn measure(lo: &[f64], hi: &[f64], n: usize, ids: &[usize], axis: usize) -> f64 {
    if ids.is_empty() {
        return 0.0;
    }
    if axis + 1 == n {
        let mut iv: Vec<(f64, f64)> = ids.iter().map(|&j| (lo[j * n + axis], hi[j * n + axis])).collect();
        iv.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut total = 0.0;
        let (mut s, mut e) = iv[0];
        for &(a, b) in &iv[1..] {
            if a > e {
                total += e - s;
                s = a;
                e = b;
            } else {
                e = e.max(b);
            }
        }
        return total + (e - s);
    }
    let mut cuts: Vec<f64> = ids.iter().flat_map(|&j| [lo[j * n + axis], hi[j * n + axis]]).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    let mut prev: Option<(Vec<usize>, f64)> = None;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let live: Vec<usize> =
            ids.iter().copied().filter(|&j| lo[j * n + axis] <= a && hi[j * n + axis] >= b).collect();
        let cross = match &prev {
            Some((p, v)) if *p == live => *v,
            _ => measure(lo, hi, n, &live, axis + 1),
        };
        total += (b - a) * cross;
        prev = Some((live, cross));
    }
    total
}
