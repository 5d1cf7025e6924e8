//! Prints the reference multi-index table for a given bound and order.
//!
//! cargo run --example table_a -- 3 12

use wce_bridge::enumerate_table_a;

fn main() {
    let mut args = std::env::args().skip(1);
    let bound: usize = args.next().map_or(3, |s| s.parse().expect("bound"));
    let p: u32 = args.next().map_or(12, |s| s.parse().expect("order"));
    let set = enumerate_table_a(p, bound);
    let width = bound.min(16);
    for (i, m) in set.iter().enumerate() {
        let cols: Vec<String> = m.dense(width).iter().map(u32::to_string).collect();
        println!("{i:>4}  ({})  |m| = {}", cols.join(", "), m.order());
    }
    println!("{} indices", set.len());
}
