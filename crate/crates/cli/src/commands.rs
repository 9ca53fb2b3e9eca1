use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};

use policybench_core::backends::{self, BatchResult};
use policybench_core::evaluation::{evaluate, OtherHandling, ScoringPolicy, UnparsableHandling};
use policybench_core::extraction::Extractor;
use policybench_core::prompting::{load_template, PromptTemplate};
use policybench_core::reporting::{compare_to_reference, reference, render_report, ReportFormat};
use policybench_core::{
    load_predictions, load_segments, load_taxonomy, write_predictions, write_segments, BackendConfig,
    CompletionClient, Error, EvaluationReport, ExtractionReport, PolicyDocument, PromptBuilder, PromptBundle,
    ResponseCache, Segment, SegmentKind, SegmenterConfig, Taxonomy,
};

use crate::config::{Config, DEFAULT_CACHE_DIR};
use crate::manifest::{hash_file, RunManifest};

pub const EXTRACTION_REPORT_FILE: &str = "extraction_report.json";

/// Settings shared by every subcommand.
pub struct Session {
    pub config: Config,
    pub offline: bool,
    pub cache_dir: PathBuf,
}

impl Session {
    pub fn new(config: Config, offline_flag: bool, cache_dir_flag: Option<PathBuf>) -> Self {
        let cache_dir = cache_dir_flag
            .or_else(|| config.cache_dir.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR));
        Session {
            offline: offline_flag || config.offline,
            cache_dir,
            config,
        }
    }
}

fn validation(message: String) -> anyhow::Error {
    anyhow!(Error::Config(message))
}

fn file_stem(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_string)
        .ok_or_else(|| validation(format!("cannot derive a policy id from {}", path.display())))
}

/// Files under `input` (or `input` itself) with one of `extensions`, sorted by name.
pub fn list_inputs(input: &Path, extensions: &[&str]) -> Result<Vec<PathBuf>> {
    let matches = |p: &Path| {
        p.extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| extensions.iter().any(|x| x.eq_ignore_ascii_case(e)))
    };
    if input.is_file() {
        return Ok(vec![input.to_path_buf()]);
    }
    if !input.is_dir() {
        bail!(validation(format!("input {} does not exist", input.display())));
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(input)
        .with_context(|| format!("listing {}", input.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && matches(p))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!(validation(format!(
            "no .{} files in {}",
            extensions.join("/."),
            input.display()
        )));
    }
    Ok(files)
}

pub struct Extracted {
    pub documents: Vec<PolicyDocument>,
    pub reports: BTreeMap<String, ExtractionReport>,
}

pub fn extract_files(files: &[PathBuf], extractor: &Extractor) -> Result<Extracted> {
    let mut documents = Vec::with_capacity(files.len());
    let mut reports = BTreeMap::new();
    for path in files {
        let policy_id = file_stem(path)?;
        let raw = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let html = String::from_utf8_lossy(&raw);
        let (mut doc, report) = extractor
            .extract(&policy_id, &html)
            .with_context(|| format!("extracting {}", path.display()))?;
        doc.source = Some(path.display().to_string());
        if reports.insert(policy_id.clone(), report).is_some() {
            bail!(validation(format!("two inputs map to policy id `{policy_id}`")));
        }
        documents.push(doc);
    }
    documents.sort_by(|a, b| a.policy_id.cmp(&b.policy_id));
    Ok(Extracted { documents, reports })
}

pub fn write_extracted(extracted: &Extracted, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for doc in &extracted.documents {
        let path = out.join(format!("{}.txt", doc.policy_id));
        std::fs::write(&path, format!("{}\n", doc.body_text)).with_context(|| format!("writing {}", path.display()))?;
    }
    let path = out.join(EXTRACTION_REPORT_FILE);
    std::fs::write(&path, serde_json::to_string_pretty(&extracted.reports)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn load_texts(input: &Path) -> Result<Vec<PolicyDocument>> {
    let mut docs = Vec::new();
    for path in list_inputs(input, &["txt"])? {
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let mut doc = PolicyDocument::from_text(file_stem(&path)?, text.trim_end().to_string());
        doc.source = Some(path.display().to_string());
        docs.push(doc);
    }
    docs.sort_by(|a, b| a.policy_id.cmp(&b.policy_id));
    Ok(docs)
}

pub fn segment_documents(documents: &[PolicyDocument], config: &SegmenterConfig) -> Vec<Segment> {
    documents
        .iter()
        .flat_map(|doc| policybench_core::segment(doc, config))
        .collect()
}

pub fn template_for(taxonomy: &Taxonomy, template: Option<&Path>) -> Result<PromptTemplate> {
    Ok(match template {
        Some(path) => load_template(&path.display().to_string())?,
        None => load_template(&taxonomy.name)?,
    })
}

pub fn build_prompts(segments: &[Segment], builder: &PromptBuilder) -> Result<Vec<PromptBundle>> {
    segments.iter().map(|s| Ok(builder.build(s)?)).collect()
}

pub fn open_client(ctx: &Session, profile: &BackendConfig) -> Result<CompletionClient> {
    let backend = backends::connect(profile, ctx.offline).map_err(Error::from)?;
    let cache = ResponseCache::open(&ctx.cache_dir)?;
    Ok(CompletionClient::new(profile.clone(), backend)
        .map_err(Error::from)?
        .with_cache(Arc::new(cache))
        .offline(ctx.offline))
}

/// Classifies and turns a batch in which nothing succeeded into a backend error.
pub fn classify(client: &CompletionClient, prompts: &[PromptBundle], taxonomy: &Taxonomy) -> Result<BatchResult> {
    let mut result = client.classify_batch_detailed(prompts, taxonomy)?;
    if result.all_failed() {
        let first = result.failures.remove(0);
        return Err(anyhow!(first.error).context(format!("all {} requests failed", result.predictions.len())));
    }
    for failure in &result.failures {
        log::warn!("{}: request failed: {}", failure.segment_id, failure.error);
    }
    Ok(result)
}

/// Copies gold labels onto freshly produced segments, matching by id.
pub fn attach_gold(segments: &mut [Segment], gold: &[Segment]) -> Result<usize> {
    let position: HashMap<String, usize> = segments
        .iter()
        .enumerate()
        .map(|(i, s)| (s.segment_id.clone(), i))
        .collect();
    let mut labeled = 0;
    for g in gold {
        let Some(&i) = position.get(&g.segment_id) else {
            bail!(validation(format!(
                "gold segment `{}` was not produced by segmentation",
                g.segment_id
            )));
        };
        if segments[i].text != g.text {
            bail!(validation(format!(
                "gold segment `{}` text differs from the segmented text",
                g.segment_id
            )));
        }
        if !g.gold_labels.is_empty() {
            labeled += 1;
        }
        segments[i].gold_labels = g.gold_labels.clone();
    }
    Ok(labeled)
}

pub fn scoring_policy(taxonomy: &Taxonomy, name: Option<&str>, exclude_unparsable: bool) -> Result<ScoringPolicy> {
    let mut policy = match name {
        Some(n) => n.parse()?,
        None => ScoringPolicy::for_taxonomy(taxonomy)?,
    };
    if taxonomy.other_label().is_none() {
        policy = policy.with_other_handling(OtherHandling::None);
    }
    if exclude_unparsable {
        policy = policy.with_unparsable_handling(UnparsableHandling::Exclude);
    }
    Ok(policy)
}

pub fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn render(report: &EvaluationReport, format: &str, compare: Option<&str>) -> Result<String> {
    let format: ReportFormat = format.parse()?;
    let mut text = render_report(report, format)?;
    if let Some(key) = compare {
        let reference = reference(key)?;
        let delta = compare_to_reference(report, &reference)?;
        if format == ReportFormat::Markdown {
            text.push('\n');
            text.push_str(&delta);
        } else {
            eprint!("{delta}");
        }
    }
    Ok(text)
}

// --- subcommands -------------------------------------------------------

pub fn cmd_extract(input: &Path, out: &Path, deny: &[String]) -> Result<()> {
    let extractor = if deny.is_empty() {
        Extractor::default()
    } else {
        Extractor::with_deny_list(deny)
    };
    let extracted = extract_files(&list_inputs(input, &["html", "htm"])?, &extractor)?;
    write_extracted(&extracted, out)?;
    eprintln!("extracted {} policies into {}", extracted.documents.len(), out.display());
    Ok(())
}

pub fn cmd_segment(input: &Path, mode: SegmentKind, merge_lists: bool, out: &Path) -> Result<()> {
    let docs = load_texts(input)?;
    let segments = segment_documents(&docs, &SegmenterConfig::new(mode).with_merge_lists(merge_lists));
    write_segments(&segments, out)?;
    eprintln!("wrote {} {mode} segments from {} policies to {}", segments.len(), docs.len(), out.display());
    Ok(())
}

pub fn cmd_prompt(taxonomy: &str, template: Option<&Path>, segments: Option<&Path>, dump: Option<&Path>) -> Result<()> {
    let taxonomy = load_taxonomy(taxonomy)?;
    let builder = PromptBuilder::new(&taxonomy, template_for(&taxonomy, template)?)?;
    let Some(segments) = segments else {
        println!("{}", builder.prefix());
        return Ok(());
    };
    let prompts = build_prompts(&load_segments(segments, &taxonomy)?, &builder)?;
    let mut lines = String::new();
    for p in &prompts {
        lines.push_str(&serde_json::to_string(p)?);
        lines.push('\n');
    }
    write_text(dump, &lines)
}

pub struct ClassifyArgs<'a> {
    pub segments: &'a Path,
    pub taxonomy: &'a str,
    pub template: Option<&'a Path>,
    pub backend: &'a str,
    pub out: &'a Path,
    pub manifest: Option<&'a Path>,
}

pub fn cmd_classify(ctx: &Session, args: ClassifyArgs<'_>) -> Result<()> {
    let taxonomy = load_taxonomy(args.taxonomy)?;
    let profile = ctx.config.profile(args.backend)?;
    let template = template_for(&taxonomy, args.template)?;
    let mut manifest = RunManifest::new("classify", &taxonomy.name, &profile.backend_id, &profile.model_id, &template.version);
    manifest.input_hashes.insert(display_name(args.segments), hash_file(args.segments)?);
    manifest.settings = serde_json::json!({ "temperature": profile.temperature });
    manifest.seal_inputs();

    let outcome = (|| -> Result<()> {
        let segments = load_segments(args.segments, &taxonomy)?;
        let builder = PromptBuilder::new(&taxonomy, template)?;
        let prompts = build_prompts(&segments, &builder)?;
        let client = open_client(ctx, &profile)?;
        let result = classify(&client, &prompts, &taxonomy)?;
        write_predictions(&result.predictions, args.out)?;
        manifest.counts.segments = segments.len();
        record_batch(&mut manifest, &result);
        manifest.outputs.insert("predictions".into(), args.out.display().to_string());
        eprintln!(
            "classified {} segments ({} cached, {} failed, {} unparsable) -> {}",
            result.predictions.len(),
            manifest.counts.cached,
            manifest.counts.failed,
            manifest.counts.unparsable,
            args.out.display()
        );
        Ok(())
    })();
    finish(&mut manifest, args.manifest, "classify", outcome)
}

pub fn cmd_evaluate(
    predictions: &Path,
    segments: &Path,
    taxonomy: &str,
    policy: Option<&str>,
    exclude_unparsable: bool,
    out: &Path,
) -> Result<()> {
    let taxonomy = load_taxonomy(taxonomy)?;
    let policy = scoring_policy(&taxonomy, policy, exclude_unparsable)?;
    let report = evaluate(
        &load_predictions(predictions)?,
        &load_segments(segments, &taxonomy)?,
        &policy,
        &taxonomy,
    )?;
    write_text(Some(out), &(report.to_json()? + "\n"))?;
    eprintln!(
        "scored {} of {} segments: accuracy {:.4}, macro F1 {:.4} -> {}",
        report.counts.scored,
        report.counts.segments,
        report.accuracy,
        report.macro_avg.f1,
        out.display()
    );
    Ok(())
}

pub fn cmd_report(input: &Path, format: &str, compare: Option<&str>, out: Option<&Path>) -> Result<()> {
    let text = std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let report = EvaluationReport::from_json(&text)?;
    write_text(out, &render(&report, format, compare)?)
}

pub struct RunArgs<'a> {
    pub html: &'a Path,
    pub gold: Option<&'a Path>,
    pub taxonomy: &'a str,
    pub template: Option<&'a Path>,
    pub backend: &'a str,
    pub mode: Option<SegmentKind>,
    pub merge_lists: bool,
    pub policy: Option<&'a str>,
    pub exclude_unparsable: bool,
    pub format: &'a str,
    pub compare: Option<&'a str>,
    pub out: &'a Path,
}

/// extract → segment → classify → evaluate → report, persisting every artifact.
pub fn cmd_run(ctx: &Session, args: RunArgs<'_>) -> Result<()> {
    let taxonomy = load_taxonomy(args.taxonomy)?;
    let profile = ctx.config.profile(args.backend)?;
    let template = template_for(&taxonomy, args.template)?;
    // OPP-115 annotates paragraphs, PPGDPR sentences
    let mode = args.mode.unwrap_or(if taxonomy.name == "ppgdpr" {
        SegmentKind::Sentence
    } else {
        SegmentKind::Paragraph
    });
    let policy = scoring_policy(&taxonomy, args.policy, args.exclude_unparsable)?;
    let html_files = list_inputs(args.html, &["html", "htm"])?;
    std::fs::create_dir_all(args.out).with_context(|| format!("creating {}", args.out.display()))?;

    let mut manifest = RunManifest::new("run", &taxonomy.name, &profile.backend_id, &profile.model_id, &template.version);
    for file in &html_files {
        manifest.input_hashes.insert(display_name(file), hash_file(file)?);
    }
    if let Some(gold) = args.gold {
        manifest.input_hashes.insert(format!("gold/{}", display_name(gold)), hash_file(gold)?);
    }
    manifest.policy = Some(policy.name.to_string());
    manifest.settings = serde_json::json!({
        "mode": mode.to_string(),
        "merge_lists": args.merge_lists,
        "temperature": profile.temperature,
        "scoring": policy,
    });
    manifest.seal_inputs();
    let manifest_path = args.out.join("manifest.json");

    let mut stage = "extract";
    let outcome = (|| -> Result<()> {
        let text_dir = args.out.join("text");
        let extracted = extract_files(&html_files, &Extractor::default())?;
        write_extracted(&extracted, &text_dir)?;
        manifest.counts.policies = extracted.documents.len();
        manifest.outputs.insert("text".into(), text_dir.display().to_string());
        manifest.stage_done(stage);

        stage = "segment";
        let config = SegmenterConfig::new(mode).with_merge_lists(args.merge_lists);
        let mut segments = segment_documents(&extracted.documents, &config);
        let segments_path = args.out.join("segments.jsonl");
        write_segments(&segments, &segments_path)?;
        manifest.counts.segments = segments.len();
        manifest.outputs.insert("segments".into(), segments_path.display().to_string());
        manifest.stage_done(stage);

        stage = "classify";
        let builder = PromptBuilder::new(&taxonomy, template.clone())?;
        let prompts = build_prompts(&segments, &builder)?;
        let client = open_client(ctx, &profile)?;
        let result = classify(&client, &prompts, &taxonomy)?;
        let predictions_path = args.out.join("predictions.jsonl");
        write_predictions(&result.predictions, &predictions_path)?;
        record_batch(&mut manifest, &result);
        manifest.outputs.insert("predictions".into(), predictions_path.display().to_string());
        manifest.stage_done(stage);

        let Some(gold_path) = args.gold else {
            return Ok(());
        };
        stage = "evaluate";
        let gold = load_segments(gold_path, &taxonomy)?;
        let labeled = attach_gold(&mut segments, &gold)?;
        let report = evaluate(&result.predictions, &segments, &policy, &taxonomy)?;
        let report_path = args.out.join("report.json");
        write_text(Some(&report_path), &(report.to_json()? + "\n"))?;
        manifest.outputs.insert("report".into(), report_path.display().to_string());
        log::info!("{labeled} labeled segments scored");
        manifest.stage_done(stage);

        stage = "report";
        let format: ReportFormat = args.format.parse()?;
        let extension = match format {
            ReportFormat::Markdown => "md",
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "rendered.json",
        };
        let rendered_path = args.out.join(format!("report.{extension}"));
        write_text(Some(&rendered_path), &render(&report, args.format, args.compare)?)?;
        manifest.outputs.insert("rendered_report".into(), rendered_path.display().to_string());
        manifest.stage_done(stage);
        eprintln!(
            "run {}: {} policies, {} segments ({} cached), accuracy {:.4}, macro F1 {:.4} -> {}",
            manifest.run_id,
            manifest.counts.policies,
            manifest.counts.segments,
            manifest.counts.cached,
            report.accuracy,
            report.macro_avg.f1,
            args.out.display()
        );
        Ok(())
    })();
    finish(&mut manifest, Some(&manifest_path), stage, outcome)
}

fn record_batch(manifest: &mut RunManifest, result: &BatchResult) {
    manifest.counts.cached = result.cached();
    manifest.counts.failed = result.failures.len();
    manifest.counts.unparsable = result
        .predictions
        .iter()
        .filter(|p| p.predicted_label.is_unparsable())
        .count();
}

fn finish(manifest: &mut RunManifest, path: Option<&Path>, stage: &str, outcome: Result<()>) -> Result<()> {
    match &outcome {
        Ok(()) => manifest.finish_ok(),
        Err(e) => manifest.finish_failed(stage, e),
    }
    if let Some(path) = path {
        manifest.write_atomic(path)?;
    }
    outcome.with_context(|| format!("stage `{stage}` failed"))
}

fn display_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}
