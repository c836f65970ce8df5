mod common;

use bubblecast::config::RunConfig;
use bubblecast::pipeline::{evaluate, run_forecast, PipelineError};
use chrono::Days;

#[test]
fn evaluation_window_guards() {
    let n = 200;
    let full = common::bubble_then_decline(n, 200, 8);
    let t2 = full.observations()[n - 1].date;
    let analysed = full.truncate_after(t2).unwrap();
    let cfg = RunConfig::load(None, &["seed=4".into(), "diagnostics.bubble_index_step_days=0".into()]).unwrap();
    let run = run_forecast(&cfg, analysed.clone()).unwrap();
    let doc = &run.document;
    let q = doc.quantiles.clone();
    assert_eq!(doc.last_observation, t2);

    let is_eval_err = |r: Result<_, PipelineError>| matches!(r, Err(PipelineError::Evaluation(_)));
    assert!(is_eval_err(evaluate(&cfg, doc, &analysed)));

    let short = full.truncate_after(q.q95 - Days::new(1)).unwrap();
    assert!(is_eval_err(evaluate(&cfg, doc, &short)));
    let mut explicit = cfg.clone();
    explicit.diagnostics.evaluation_end = Some(short.last_date());
    if short.last_date() >= q.q05 {
        assert!(evaluate(&explicit, doc, &short).is_ok());
    }
    if q.q05 > t2 + Days::new(1) {
        explicit.diagnostics.evaluation_end = Some(t2 + Days::new(1));
        assert!(is_eval_err(evaluate(&explicit, doc, &full)));
    }
    explicit.diagnostics.evaluation_end = Some(full.last_date() + Days::new(1));
    assert!(is_eval_err(evaluate(&explicit, doc, &full)));

    let eval = evaluate(&cfg, doc, &full).unwrap();
    assert_eq!(eval.document.evaluation_end, full.last_date());
    assert_eq!(eval.metrics.len(), 3 + 2);
    for (_, m) in &eval.metrics {
        assert!(m.entries.windows(2).all(|w| w[0].date < w[1].date));
    }
}
