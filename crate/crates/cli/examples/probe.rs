//! One-off scenario probe: prints tick-by-tick progression details.

use physarum::scenes;
use physarum_core::engine::{
    extract_graph, init_plasmodium, run_until, Fields, StopCondition,
};
use physarum_core::environment::SceneLimits;

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let name = args.get(1).map(|s| s.as_str()).unwrap_or("spanning_tree");
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0);
    let max: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(12000);

    let doc = scenes::default_scene(name, seed).unwrap();
    let scene = doc.into_scene(None, &SceneLimits::default()).map_err(|e| anyhow::anyhow!("{e}"))?;
    let mut state = init_plasmodium(&scene);
    let mut fields = Fields::zeroed(&scene);
    for chunk in 0..(max / 500) {
        let r = run_until(&mut state, &mut fields, &scene, StopCondition::AllSourcesColonized { max_ticks: 500 });
        let zones: Vec<String> = state
            .zones
            .iter()
            .filter(|z| z.alive)
            .map(|z| format!("z{}@({},{})a{:.2}", z.id, z.position.x, z.position.y, z.activity))
            .collect();
        println!(
            "t={:<6} colonized={}/{} zones={} occupied={} {:?}",
            state.tick,
            state.colonized_count(),
            state.sources.iter().filter(|s| s.kind == physarum_core::environment::SpeciesKind::Attractant).count(),
            state.live_zone_count(),
            state.occupancy.occupied_count(),
            zones.iter().take(6).collect::<Vec<_>>()
        );
        if r.completed {
            println!("COMPLETED at {}", state.tick);
            break;
        }
    }
    let g = extract_graph(&state, scene.grid.cell_size_mm)?;
    println!(
        "graph: {} nodes, {} edges ({} live), live length {:.1}",
        g.nodes.len(),
        g.edges.len(),
        g.edges_iter(false).count(),
        g.live_length_mm()
    );
    Ok(())
}
