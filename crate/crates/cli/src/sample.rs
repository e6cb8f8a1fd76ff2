use dnip::Dataset;
use rand::seq::{index, SliceRandom};
use rand::Rng;

/// Indices (ascending) of a `size`-sample subset of `dataset`.
///
/// Stratified when every class present in the data can keep at least one
/// sample: each class gets one, the rest is split in proportion to the
/// remaining class sizes (largest remainder). Otherwise a simple random
/// sample. The flag reports which was used.
pub fn subsample<R: Rng + ?Sized>(
    dataset: &Dataset,
    size: usize,
    rng: &mut R,
) -> dnip::Result<(Vec<usize>, bool)> {
    let m = dataset.len();
    if size == 0 || size > m {
        return Err(dnip::Error::InvalidConfig(format!(
            "subsample size {size} outside 1..={m}"
        )));
    }
    if size == m {
        return Ok(((0..m).collect(), true));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); dataset.num_classes()];
    for (i, &y) in dataset.labels().iter().enumerate() {
        by_class[y].push(i);
    }
    let present: Vec<usize> = (0..by_class.len())
        .filter(|&c| !by_class[c].is_empty())
        .collect();
    if size < present.len() {
        let mut picked = index::sample(rng, m, size).into_vec();
        picked.sort_unstable();
        return Ok((picked, false));
    }

    let spare = size - present.len();
    let pool = m - present.len();
    let exact: Vec<f64> = present
        .iter()
        .map(|&c| spare as f64 * (by_class[c].len() - 1) as f64 / pool as f64)
        .collect();
    let mut quota: Vec<usize> = exact.iter().map(|e| 1 + e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..present.len()).collect();
    order.sort_by(|&a, &b| {
        (exact[b] - exact[b].floor())
            .total_cmp(&(exact[a] - exact[a].floor()))
            .then(a.cmp(&b))
    });
    let short = size - quota.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        quota[i] += 1;
    }

    let mut picked = Vec::with_capacity(size);
    for (q, &c) in quota.iter().zip(&present) {
        let members = &mut by_class[c];
        members.shuffle(rng);
        picked.extend_from_slice(&members[..*q]);
    }
    picked.sort_unstable();
    Ok((picked, true))
}
