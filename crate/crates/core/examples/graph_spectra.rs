//! Reads an edge list and prints the spectral constants that enter the
//! rate bounds. Pass a path, or run without arguments for a ring.

use druid_core::topology::{build_matrices, spectral_constants};
use druid_core::Graph;

fn main() -> anyhow::Result<()> {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path)?,
        None => "6 6\n1 2\n2 3\n3 4\n4 5\n5 6\n1 6\n".to_string(),
    };
    let g = Graph::from_edge_list(&text)?;
    let tm = build_matrices(&g);
    println!("{} agents, {} edges, max degree {}", g.num_agents(), g.num_edges(), g.max_degree());
    for l in 0..g.num_agents() {
        let sc = spectral_constants(&tm, l)?;
        println!(
            "designated {}: σ_max(L_s) {:.4}  σ_max(L_u) {:.4}  σ_min(L_u) {:.4}  σ⁺_min(CCᵀ) {:.4}",
            l + 1,
            sc.sigma_max_ls,
            sc.sigma_max_lu,
            sc.sigma_min_lu,
            sc.sigma_min_plus_cct
        );
    }
    Ok(())
}
