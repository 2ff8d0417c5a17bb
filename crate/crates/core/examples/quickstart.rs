//! Stores a handful of payloads under two labels, then repeats one retrieve
//! and prints how its cost falls as the target climbs the search order.

use nstore_core::codec::Payload;
use nstore_core::nmn::{HiveParams, Memory};
use nstore_core::ops::{OpControls, SearchParams};

fn main() -> nstore_core::Result<()> {
    let mut memory = Memory::with_hive("image", HiveParams::case_study(&["deer"]))?;
    let controls = OpControls::default();
    let blobs: Vec<Vec<u8>> = (0..6u8)
        .map(|i| (0..1024u32).map(|j| (j * (u32::from(i) + 5) % 89) as u8 + i * 25).collect())
        .collect();

    for (i, blob) in blobs.iter().enumerate() {
        let label = if i % 2 == 0 { "deer" } else { "background" };
        let q = SearchParams::labels(&[label], 0.0, 0.95);
        let out = memory.store(Payload::new("image", blob.clone(), format!("img-{i}")), &q, &controls)?;
        println!("store img-{i} as {label}: {:?}, cost {}", out.kind, out.cost);
    }

    let feature = memory.hive(0).extractor().extract(&blobs[4]);
    let q = SearchParams::labels(&["deer"], 0.0, 0.95).with_fine_cue(feature);
    for round in 1..=4 {
        let out = memory.retrieve(0, &q, &controls)?;
        let origin = out.returned_payload.as_ref().map(|p| p.origin.as_str());
        println!("retrieve #{round}: {:?} {origin:?}, cost {}", out.kind, out.cost);
    }
    println!("{} bytes held", memory.total_bytes());
    Ok(())
}
