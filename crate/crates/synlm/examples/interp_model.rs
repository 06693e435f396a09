//! The deleted-interpolation engine on its own: count collection, tied
//! lambdas estimated by EM on held-out counts, and descriptor round trips.
//!
//! Run with `cargo run -p synlm --example interp_model`.

use std::sync::Arc;

use synlm::interp::{
    default_bounds, em_lambdas, Descriptor, EventCounts, InterpModel, LambdaBuckets,
};
use synlm::symtab::SymbolTable;

fn main() -> synlm::Result<()> {
    let mut tab = SymbolTable::new();
    let (sun, rain, wind) = (tab.intern("sun"), tab.intern("rain"), tab.intern("wind"));
    let (spring, fall) = (tab.intern("spring"), tab.intern("fall"));
    let (am, pm) = (tab.intern("am"), tab.intern("pm"));

    // Joint counts u | season, daytime at the maximal order; lower orders
    // come from marginalization.
    let mut dev = EventCounts::new(2);
    for (u, ctx, n) in [
        (sun, [spring, am], 18.0),
        (sun, [spring, pm], 11.0),
        (rain, [spring, am], 6.0),
        (rain, [fall, am], 14.0),
        (rain, [fall, pm], 16.0),
        (wind, [fall, pm], 9.0),
        (wind, [spring, pm], 2.0),
    ] {
        dev.add(u, &ctx, n)?;
    }
    let mut cv = EventCounts::new(2);
    for (u, ctx, n) in [
        (sun, [spring, am], 3.0),
        (rain, [fall, pm], 4.0),
        (wind, [fall, am], 1.0), // unseen at the top order: back-off only
    ] {
        cv.add(u, &ctx, n)?;
    }

    let init = LambdaBuckets::init(2, &default_bounds());
    let (lambdas, trace) = em_lambdas(&dev, &cv, 3, &init, 10)?;
    for (level, lls) in trace.iter().enumerate() {
        println!(
            "level {}: cv log-likelihood {:.6} -> {:.6}",
            level,
            lls.first().unwrap(),
            lls.last().unwrap()
        );
    }

    let tab = Arc::new(tab);
    let model = InterpModel::new(Arc::clone(&tab), vec![sun, rain, wind], dev, lambdas)?;
    println!("\nP(. | spring, am):");
    for &u in model.alphabet() {
        println!("  {:>5}  {:.5}", tab.name(u), model.prob(u, &[spring, am])?);
    }
    let total: f64 = model
        .alphabet()
        .iter()
        .map(|&u| model.prob(u, &[spring, am]).unwrap())
        .sum();
    println!("  sum   {:.12}", total);

    // Unseen context: full back-off, still strictly positive everywhere.
    println!("\nP(wind | fall, am) with that event unseen in training: {:.5}",
        model.prob(wind, &[fall, am])?);

    let desc = Descriptor {
        main_counts_file: "weather.counts".into(),
        held_counts_file: "weather.cv.counts".into(),
        max_order: model.max_order(),
        no_iterations: 10,
        lambdas: model.lambdas().clone(),
    };
    let text = desc.to_text();
    let back = Descriptor::from_text(&text)?;
    println!("\ndescriptor round trip byte-identical: {}", back.to_text() == text);
    print!("\n{}", text);
    Ok(())
}
