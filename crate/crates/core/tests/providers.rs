//! Remote provider clients against a local stub.

use std::sync::Arc;
use std::time::Duration;

use serde_json::{json, Value};

use twosys_core::bank::{augment, seed_entries, ClassifyOptions, Paraphraser, RemoteParaphraser, ThinkBank};
use twosys_core::embedding::{cosine, embed_dim, EmbedError, Embedder, EmbedderSpec, RemoteEmbedder};
use twosys_core::model::{Family, Instruction, SystemLabel};
use twosys_core::orchestrator::{Executive, Session, Unpaced};
use twosys_core::planner::{render_plan, OraclePlanner, PlanError, Planner, PromptTemplate, RemotePlanner};
use twosys_core::provider::ProviderError;
use twosys_core::sim::gen_scene;
use twosys_core::stub::StubServer;

const T: Duration = Duration::from_secs(5);

/// Answers embedding requests with builtin vectors, listed in reverse so `index` matters.
fn embedding_stub(dim: usize) -> StubServer {
    StubServer::start(move |req| {
        let body: Value = serde_json::from_str(&req.body).unwrap();
        let input = body["input"].as_array().unwrap();
        let mut data: Vec<Value> = input
            .iter()
            .enumerate()
            .map(|(i, t)| json!({"index": i, "embedding": embed_dim(t.as_str().unwrap(), dim).unwrap().values()}))
            .collect();
        data.reverse();
        (200, json!({"data": data}).to_string())
    })
    .unwrap()
}

fn remote(url: String, dim: usize) -> RemoteEmbedder {
    RemoteEmbedder::new(EmbedderSpec::remote(dim, url, "stub-embed"), T).unwrap()
}

#[test]
fn remote_embedder_matches_request_contract() {
    let stub = embedding_stub(64);
    let e = remote(stub.url("/v1/embeddings"), 64);
    let texts = vec!["red cube".to_string(), "blue bowl".to_string()];
    let got = e.embed_batch(&texts).unwrap();
    for (t, v) in texts.iter().zip(&got) {
        assert!((cosine(v, &embed_dim(t, 64).unwrap()).unwrap() - 1.0).abs() < 1e-12);
    }
    let reqs = stub.requests();
    assert_eq!(reqs.len(), 1);
    assert_eq!(reqs[0].method, "POST");
    assert_eq!(reqs[0].path, "/v1/embeddings");
    let body: Value = serde_json::from_str(&reqs[0].body).unwrap();
    assert_eq!(body, json!({"model": "stub-embed", "input": texts}));
}

#[test]
fn remote_embedder_errors() {
    let stub = StubServer::fixed(500, r#"{"error":"down"}"#).unwrap();
    match remote(stub.url("/e"), 64).embed_one("x") {
        Err(EmbedError::Provider(ProviderError::Status { status: 500, .. })) => {}
        other => panic!("{other:?}"),
    }
    let stub = StubServer::fixed(200, r#"{"data":[{"index":0,"embedding":[1.0,0.0]}]}"#).unwrap();
    assert!(matches!(remote(stub.url("/e"), 64).embed_one("x"), Err(EmbedError::ShapeMismatch(_))));
    let stub = StubServer::fixed(200, "not json").unwrap();
    assert!(matches!(remote(stub.url("/e"), 64).embed_one("x"), Err(EmbedError::ShapeMismatch(m)) if m.contains("JSON")));
    let stub = StubServer::start(|_| {
        std::thread::sleep(Duration::from_secs(3));
        (200, "{}".into())
    })
    .unwrap();
    let slow = RemoteEmbedder::new(EmbedderSpec::remote(64, stub.url("/e"), "m"), Duration::from_millis(200)).unwrap();
    assert!(matches!(slow.embed_one("x"), Err(EmbedError::Provider(ProviderError::Transport(_)))));
    let dead = RemoteEmbedder::new(EmbedderSpec::remote(64, "http://127.0.0.1:9/e", "m"), T).unwrap();
    assert!(matches!(dead.embed_one("x"), Err(EmbedError::Provider(ProviderError::Transport(_)))));
}

#[test]
fn bank_over_remote_embedder_classifies_like_builtin() {
    let stub = embedding_stub(512);
    let emb: Arc<dyn Embedder> = Arc::new(remote(stub.url("/e"), 512));
    let bank = ThinkBank::new(seed_entries(), emb).unwrap();
    for f in Family::ALL {
        let text = gen_scene(11, *f).1.instruction_text;
        let c = bank.classify(&text, ClassifyOptions::default()).unwrap();
        assert_eq!(c.label, f.system(), "{f}: {text}");
    }
}

fn chat(content: &str) -> String {
    json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string()
}

#[test]
fn remote_planner_executes_model_steps() {
    let family = Family::WordCorrection;
    let (scene, spec) = gen_scene(4, family);
    let oracle = OraclePlanner::default().plan(&Instruction::new("t", &spec.instruction_text).unwrap(), &scene).unwrap();
    let reply = chat(&render_plan(&oracle));
    let stub = StubServer::start(move |_| (200, reply.clone())).unwrap();
    let planner: Arc<dyn Planner> = Arc::new(RemotePlanner::new(stub.url("/v1/chat/completions"), "stub-chat", PromptTemplate::bundled(), T));

    let bank = Arc::new(ThinkBank::starter(Arc::new(twosys_core::embedding::BuiltinEmbedder::default())).unwrap());
    let mut s = Session::new("remote", Arc::new(Executive::new(bank, planner)), 8, 8);
    s.reset(4, family.as_str()).unwrap();
    let r = s.handle_instruction(&spec.instruction_text, &Unpaced).clone();
    assert_eq!(r.label, Some(SystemLabel::Slow));
    assert!(r.success, "{:?}", r.failure);
    assert_eq!(r.plan.unwrap().steps.len(), oracle.steps.len());

    let req: Value = serde_json::from_str(&stub.requests()[0].body).unwrap();
    assert_eq!(req["model"], "stub-chat");
    let prompt = req["messages"][1]["content"].as_str().unwrap();
    assert!(prompt.contains(&spec.instruction_text));
    assert!(prompt.contains(&twosys_core::model::caption(&scene)));
}

#[test]
fn remote_planner_rejects_bad_replies() {
    let (scene, spec) = gen_scene(4, Family::ColorSort);
    let ins = Instruction::new("t", &spec.instruction_text).unwrap();
    let plan = |body: String| {
        let stub = StubServer::start(move |_| (200, body.clone())).unwrap();
        RemotePlanner::new(stub.url("/c"), "m", PromptTemplate::bundled(), T).plan(&ins, &scene)
    };
    assert!(matches!(plan(chat("I would rather not.")), Err(PlanError::PlanParse { .. })));
    assert!(matches!(plan(json!({"choices": []}).to_string()), Err(PlanError::Provider(ProviderError::Shape(_)))));
    let stub = StubServer::fixed(429, "slow down").unwrap();
    match RemotePlanner::new(stub.url("/c"), "m", PromptTemplate::bundled(), T).plan(&ins, &scene) {
        Err(PlanError::Provider(ProviderError::Status { status: 429, message })) => assert_eq!(message, "slow down"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn remote_paraphraser_lines_and_failures() {
    let stub = StubServer::fixed(200, chat("1. first way\n2) second way\n\n- third way")).unwrap();
    let p = RemoteParaphraser::new(stub.url("/c"), "m", 2, T);
    assert_eq!(p.paraphrase("pick up the red cube").unwrap(), vec!["first way", "second way"]);
    let body: Value = serde_json::from_str(&stub.requests()[0].body).unwrap();
    assert!(body["messages"][1]["content"].as_str().unwrap().ends_with("pick up the red cube"));

    let down = StubServer::fixed(503, "").unwrap();
    let seeds = seed_entries();
    let a = augment(&seeds, 1, &RemoteParaphraser::new(down.url("/c"), "m", 2, T), None).unwrap();
    assert_eq!(a.entries.len(), seeds.len());
    assert_eq!(a.failures.len(), seeds.len());
}
