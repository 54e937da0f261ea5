//! Trace live tip positions through a run.

use physarum_core::engine::*;
use physarum_core::environment::*;

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let name = args.get(1).cloned().unwrap_or("spanning_tree".into());
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(7);
    let doc = physarum::scenes::default_scene(&name, seed).unwrap();
    let scene = doc.into_scene(None, &SceneLimits::default()).map_err(|e| anyhow::anyhow!("{e}"))?;
    let mut state = init_plasmodium(&scene);
    let mut fields = Fields::zeroed(&scene);
    warm_fields(&mut state, &mut fields, &scene, 3000);
    for _ in 0..1500 {
        let r = run_until(&mut state, &mut fields, &scene, StopCondition::AllSourcesColonized { max_ticks: 10 });
        let tips: Vec<String> = state
            .zones
            .iter()
            .filter(|z| z.alive && scene.substrate.nutrient(z.position) < 0.5)
            .map(|z| {
                let a = fields.attractant.get(z.position);
                format!("z{}({},{}) f={:.3} act={:.2}", z.id, z.position.x, z.position.y, a, z.activity)
            })
            .collect();
        println!("t={} col={} {}", state.tick, state.colonized_count(), tips.join("  "));
        if r.completed {
            break;
        }
    }
    Ok(())
}
