//! Sinusoidal position embeddings and their fusion with frame features.

use mgg::embed::{build_embedding, fuse};
use ndarray::Array2;

fn main() -> mgg::Result<()> {
    let emb = build_embedding(64, 8)?;
    println!("frame  sin(n)   cos(n)   sin(n/100) cos(n/100)");
    for r in [0, 1, 9, 63] {
        let t = emb.table();
        println!("{:>5}  {:+.4}  {:+.4}  {:+.4}    {:+.4}", r + 1, t[[r, 0]], t[[r, 1]], t[[r, 4]], t[[r, 5]]);
    }
    let features = Array2::<f32>::ones((64, 3));
    let fused = fuse(features.view(), &emb)?;
    println!("fused shape {:?} (features first, then embedding)", fused.data.dim());
    Ok(())
}
