//! Multisets over small integers and a brute-force Dershowitz–Manna checker.

/// All multisets (as sorted vectors) of size at most `max` over `0..values`.
pub fn multisets(values: i64, max: usize) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max {
        let mut next = Vec::new();
        for m in &frontier {
            let lo = m.last().copied().unwrap_or(0);
            for v in lo..values {
                let mut m2: Vec<i64> = m.clone();
                m2.push(v);
                next.push(m2);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn remove_all(from: &[i64], what: &[i64]) -> Option<Vec<i64>> {
    let mut rest = from.to_vec();
    for w in what {
        let i = rest.iter().position(|x| x == w)?;
        rest.remove(i);
    }
    Some(rest)
}

/// `m >_DM n`: some non-empty X within m and Y with n = (m - X) + Y, every element of Y
/// below some element of X. Sub-multisets X are enumerated as subsets of positions.
pub fn dershowitz_manna(m: &[i64], n: &[i64], gt: impl Fn(i64, i64) -> bool) -> bool {
    for mask in 1u32..(1 << m.len()) {
        let x: Vec<i64> = (0..m.len()).filter(|i| mask & (1 << i) != 0).map(|i| m[i]).collect();
        let kept: Vec<i64> = (0..m.len()).filter(|i| mask & (1 << i) == 0).map(|i| m[i]).collect();
        let Some(y) = remove_all(n, &kept) else { continue };
        if y.iter().all(|&b| x.iter().any(|&a| gt(a, b))) {
            return true;
        }
    }
    false
}
