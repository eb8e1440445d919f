//! The worked strategy examples, each returning a named pass/fail result.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stimloop_core::agents::AgentFeedback;
use stimloop_core::backend::ReplayEntry;
use stimloop_core::prompting::context::select_exchanges;
use stimloop_core::prompting::restart::on_restart;
use stimloop_core::prompting::{
    sample_pure_random, sample_type_based, should_restart, BestMessageBuffer, BufferReset, ContextStrategy, Dialogue,
    Exchange, MissedBinMethod, MissedBinSampler, RestartPlan,
};
use stimloop_core::{BinIndex, CoverageState, Difficulty, Dut, Role, StrategyConfig};

use super::{toy_agent, toy_plan, ToyDut};

pub type Check = (&'static str, Result<(), String>);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn bins(ids: &[u32]) -> Vec<BinIndex> {
    ids.iter().map(|&i| BinIndex(i)).collect()
}

fn pure_random_returns_all_of_five() -> Result<(), String> {
    let uncovered = bins(&[1, 3, 4, 6, 8]);
    let got = sample_pure_random(&uncovered, 7, &mut ChaCha8Rng::seed_from_u64(1));
    ensure(got == uncovered, || format!("{got:?}"))
}

fn type_based_shape() -> Result<(), String> {
    let plan = toy_plan(10);
    let uncovered = bins(&[1, 2, 3, 4, 5, 6, 7, 8, 9]);
    for seed in 0..200 {
        let got = sample_type_based(&plan, &uncovered, 7, &mut ChaCha8Rng::seed_from_u64(seed));
        let kinds: Vec<Difficulty> = got[2..].iter().map(|b| plan.difficulty(*b)).collect();
        let mut distinct = got.clone();
        distinct.sort();
        distinct.dedup();
        let expected = [Difficulty::Easier, Difficulty::Easier, Difficulty::Easier, Difficulty::Harder, Difficulty::Harder];
        ensure(
            got.len() == 7 && got[..2] == uncovered[..2] && kinds == expected && distinct.len() == 7
                && got.iter().all(|b| uncovered.contains(b)),
            || format!("seed {seed}: {got:?}"),
        )?;
    }
    Ok(())
}

fn mixed_below_threshold_is_type_based() -> Result<(), String> {
    let plan = toy_plan(10);
    let uncovered = bins(&[0, 1, 2, 3, 4, 5, 6, 7, 8, 9]);
    let mixed = MissedBinSampler::new(MissedBinMethod::Mixed, 7, 0.15);
    let typed = MissedBinSampler::new(MissedBinMethod::TypeBased, 7, 0.15);
    for seed in 0..50 {
        let a = mixed.sample(&plan, &uncovered, 0.10, &mut ChaCha8Rng::seed_from_u64(seed)).map_err(|e| e.to_string())?;
        let b = typed.sample(&plan, &uncovered, 0.10, &mut ChaCha8Rng::seed_from_u64(seed)).map_err(|e| e.to_string())?;
        ensure(a == b, || format!("seed {seed}: {a:?} vs {b:?}"))?;
    }
    Ok(())
}

fn exchange(seq: u64, hits: &[u32], rng: &mut ChaCha8Rng) -> Exchange {
    let mut e = Exchange::new(format!("query {seq}"), format!("response {seq}"), seq, rng);
    e.set_hits(&toy_plan(10), &bins(hits));
    e
}

fn dialogue(hit_lists: &[&[u32]], buffer: &mut BestMessageBuffer) -> Dialogue {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut d = Dialogue::new("system".into(), "initial".into());
    d.initial_response = Some("first".into());
    for (seq, hits) in hit_lists.iter().enumerate() {
        let e = exchange(seq as u64, hits, &mut rng);
        buffer.offer(e.clone());
        d.exchanges.push(e);
    }
    d
}

fn two_exchanges_are_always_kept() -> Result<(), String> {
    for strategy in [
        ContextStrategy::Recent,
        ContextStrategy::Successful,
        ContextStrategy::MixedRecentSuccessful,
        ContextStrategy::SuccessfulDifficult,
    ] {
        let mut buffer = BestMessageBuffer::for_strategy(strategy);
        let d = dialogue(&[&[0], &[]], &mut buffer);
        let seqs: Vec<u64> = select_exchanges(&d, &buffer, strategy, true).iter().map(|e| e.seq).collect();
        ensure(seqs == [0, 1], || format!("{strategy:?}: {seqs:?}"))?;
    }
    Ok(())
}

fn three_maxima_are_selected() -> Result<(), String> {
    let mut buffer = BestMessageBuffer::for_strategy(ContextStrategy::Successful);
    let d = dialogue(&[&[0, 1, 2, 3, 4], &[5], &[0, 1, 2, 3, 4], &[5, 6, 7, 8, 9], &[0, 1]], &mut buffer);
    let seqs: Vec<u64> =
        select_exchanges(&d, &buffer, ContextStrategy::Successful, true).iter().map(|e| e.seq).collect();
    ensure(seqs == [0, 2, 3], || format!("{seqs:?}"))
}

fn weighting_flips_the_ranking() -> Result<(), String> {
    // toy_0 and toy_2 are easier, toy_1 is harder.
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let easy = exchange(0, &[0, 2], &mut rng);
    let hard = exchange(1, &[1], &mut rng);
    let mut plain = BestMessageBuffer::for_strategy(ContextStrategy::Successful);
    let mut weighted = BestMessageBuffer::for_strategy(ContextStrategy::SuccessfulDifficult);
    for b in [&mut plain, &mut weighted] {
        b.offer(easy.clone());
        b.offer(hard.clone());
    }
    let scores = (plain.score(&easy), plain.score(&hard), weighted.score(&easy), weighted.score(&hard));
    ensure(
        plain.entries()[0].seq == 0 && weighted.entries()[0].seq == 1 && scores == (2.0, 1.0, 2.0, 2.5),
        || format!("scores {scores:?}"),
    )
}

fn restart_examples() -> Result<(), String> {
    let cases: [(&[usize], RestartPlan, f64, bool); 3] = [
        (&[0, 0, 1, 1, 0, 0, 0], RestartPlan::Normal, 0.5, true),
        (&[0, 0, 0, 2], RestartPlan::Low, 0.5, true),
        (&[0, 0, 0, 0], RestartPlan::CoverageRateBased, 0.20, false),
    ];
    for (deltas, plan, rate, want) in cases {
        let got = should_restart(deltas, plan, rate, 0.15);
        ensure(got == want, || format!("{deltas:?} {plan:?} at {rate}: {got}"))?;
    }
    Ok(())
}

fn clear_empties_the_buffer() -> Result<(), String> {
    let mut buffer = BestMessageBuffer::new(false);
    let mut d = dialogue(&[&[0], &[1, 2]], &mut buffer);
    on_restart(&mut d, &mut buffer, BufferReset::Clear);
    ensure(buffer.is_empty() && d.exchanges.is_empty() && d.initial_response.is_none(), || {
        format!("buffer {} exchanges {}", buffer.len(), d.exchanges.len())
    })
}

/// Builds a buffer, forces a restart under `stable_keep`, then reports for
/// each of the next five responses whether the best buffered query was in
/// the prompt.
fn stable_keep_visibility() -> Result<Vec<bool>, String> {
    let strategy = StrategyConfig {
        context: ContextStrategy::Successful,
        restart: RestartPlan::Normal,
        buffer_reset: BufferReset::StableKeep,
        ..Default::default()
    };
    let dut = ToyDut::new(10);
    let mut agent = toy_agent(&dut, vec![ReplayEntry::text("```\n1\n```"); 40], strategy, 3);
    let state = CoverageState::new(dut.plan());
    let fb = AgentFeedback { state: &state, rate: 0.0, status: None };
    let step = |agent: &mut stimloop_core::LlmAgent, hits: &[BinIndex]| -> Result<(Vec<String>, bool), String> {
        let p = agent.prepare(&fb).map_err(|e| e.to_string())?;
        let queries = p.messages.iter().filter(|m| m.role == Role::User).map(|m| m.content.clone()).collect();
        agent.call(p).map_err(|e| e.to_string())?;
        while agent.next_stimulus().is_some() {}
        Ok((queries, agent.observe(hits, 0.0, false)))
    };
    let mut responses = 0;
    loop {
        let hits = if responses == 1 { bins(&[0, 1]) } else { vec![] };
        responses += 1;
        if step(&mut agent, &hits)?.1 {
            break;
        }
    }
    let best = agent.buffer().entries().first().ok_or("buffer emptied by restart")?.query.clone();
    (0..5).map(|_| step(&mut agent, &[]).map(|(q, _)| q.contains(&best))).collect()
}

fn stable_keep_hides_then_restores() -> Result<(), String> {
    let seen = stable_keep_visibility()?;
    ensure(seen == [false, false, false, false, true], || format!("best exchange visible per response: {seen:?}"))
}

pub fn strategy_examples() -> Vec<Check> {
    vec![
        ("sample: pure_random with 5 uncovered returns all 5", pure_random_returns_all_of_five()),
        ("sample: type_based takes the first 2, then 3 easier and 2 harder", type_based_shape()),
        ("sample: mixed below the rate threshold equals type_based", mixed_below_threshold_is_type_based()),
        ("context: 2 exchanges are kept by every strategy", two_exchanges_are_always_kept()),
        ("context: hits [5,1,5,5,2] select the three maxima", three_maxima_are_selected()),
        ("context: 2 easier vs 1 harder ranking flips under weighting", weighting_flips_the_ranking()),
        ("restart: normal, low and rate-based examples", restart_examples()),
        ("restart: clear empties the buffer", clear_empties_the_buffer()),
        ("restart: stable_keep hides the buffer until the 5th response", stable_keep_hides_then_restores()),
    ]
}
