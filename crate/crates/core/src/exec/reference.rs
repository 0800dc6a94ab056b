use super::data::Database;

/// Result size and `SUM(R_0.a + R_n.b)` of the whole chain, joined left to
/// right with plain nested loops.
pub fn nested_loop_chain(db: &Database) -> (u64, u128) {
    let first = &db.relations[0];
    let mut cur: Vec<(u64, u64)> = first.a.iter().copied().zip(first.b.iter().copied()).collect();
    for rel in &db.relations[1..] {
        let mut next = Vec::new();
        for &(a, key) in &cur {
            for (i, &k) in rel.a.iter().enumerate() {
                if k == key {
                    next.push((a, rel.b[i]));
                }
            }
        }
        cur = next;
    }
    (cur.len() as u64, cur.iter().map(|&(a, b)| u128::from(a) + u128::from(b)).sum())
}
