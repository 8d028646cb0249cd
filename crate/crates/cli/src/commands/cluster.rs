use std::fs;
use std::path::{Path, PathBuf};

use lexswap_core::cluster::{
    assign, cluster_histogram, domain_cluster, kmeans_fit, read_embeddings, write_model, KMeansParams,
};
use lexswap_core::{DomainTag, EmbeddingMatrix64};
use serde_json::json;

use super::{set, set_path};
use crate::config::{existing, require, PipelineConfig};
use crate::error::{CliError, CliResult};
use crate::output::{describe, digest_inputs, ensure_dir, write_json, Manifest, TrackedFile};
use crate::{thread_pool, ClusterArgs};

fn ids_for(emb: &Path, explicit: Option<PathBuf>) -> PathBuf {
    explicit.unwrap_or_else(|| {
        let mut p = emb.as_os_str().to_owned();
        p.push(".ids");
        p.into()
    })
}

fn read_weights(path: &Path, n: usize) -> CliResult<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let weights = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("{}:{}: invalid weight {l:?}", path.display(), i + 1)))
        })
        .collect::<CliResult<Vec<_>>>()?;
    if weights.len() != n {
        return Err(CliError::Usage(format!(
            "{}: {} weights for {n} embeddings",
            path.display(),
            weights.len()
        )));
    }
    Ok(weights)
}

pub fn run(args: ClusterArgs, mut config: PipelineConfig) -> CliResult<()> {
    set_path(&mut config.paths.embeddings, args.embeddings);
    set_path(&mut config.paths.benchmark_embeddings, args.benchmark_embeddings);
    set_path(&mut config.paths.out, args.out);
    let c = &mut config.cluster;
    set(&mut c.k, args.k);
    set(&mut c.seed, args.seed);
    set(&mut c.tol, args.tol);
    set(&mut c.max_iter, args.max_iter);
    set(&mut c.n_init, args.n_init);

    let emb_path = existing(&config.paths.embeddings, "--embeddings")?.to_owned();
    let ids_path = ids_for(&emb_path, args.ids);
    let out = require(&config.paths.out, "--out")?.to_owned();
    let bench = match &config.paths.benchmark_embeddings {
        Some(_) => {
            let p = existing(&config.paths.benchmark_embeddings, "--benchmark-embeddings")?.to_owned();
            let ids = ids_for(&p, args.benchmark_ids);
            Some((p, ids))
        }
        None => None,
    };
    if let Some(w) = &args.weights {
        if !w.exists() {
            return Err(CliError::Usage(format!("--weights: input path does not exist: {}", w.display())));
        }
    }

    let emb: EmbeddingMatrix64 = read_embeddings(&emb_path, &ids_path)?;
    let weights = args.weights.as_deref().map(|w| read_weights(w, emb.len())).transpose()?;
    let params = KMeansParams {
        k: config.cluster.k,
        seed: config.cluster.seed,
        max_iter: config.cluster.max_iter,
        tol: config.cluster.tol,
        n_init: config.cluster.n_init,
    };

    let pool = thread_pool(config.workers)?;
    let (model, assignments) = pool.install(|| -> CliResult<_> {
        let model = kmeans_fit(&emb, params)?;
        let assignments = assign(&emb, &model)?;
        Ok((model, assignments))
    })?;
    log::info!(
        "k-means: k = {}, inertia {:.6}, {} iterations",
        model.k(),
        model.inertia,
        model.iterations
    );

    let domain = match &bench {
        Some((p, ids)) => {
            let b: EmbeddingMatrix64 = read_embeddings(p, ids)?;
            let b_assign: Vec<usize> = pool.install(|| assign(&b, &model))?.into_iter().map(|(_, c)| c).collect();
            Some(domain_cluster(&b_assign, model.k())?)
        }
        None => None,
    };

    ensure_dir(&out)?;
    let mut outputs = Vec::new();
    let model_path = out.join("model.bin");
    write_model(&model, &model_path)?;
    outputs.push(describe(&out, "model.bin")?);

    let mut tagged = TrackedFile::create(&out, "assignments.jsonl")?;
    for &(id, cluster) in &assignments {
        let mut row = json!({ "id": id, "cluster": cluster });
        if let Some(d) = &domain {
            let tag = if cluster == d.cluster { DomainTag::Task } else { DomainTag::NonTask };
            row["domain"] = json!(tag);
        }
        tagged.write_line(&row.to_string())?;
    }
    outputs.push(tagged.finish()?);

    let clusters: Vec<usize> = assignments.iter().map(|&(_, c)| c).collect();
    let histogram = cluster_histogram(&clusters, model.k(), weights.as_deref())?;
    outputs.push(write_json(&out, "histogram.json", &histogram)?);
    if let Some(d) = &domain {
        outputs.push(write_json(&out, "domain_report.json", d)?);
        eprintln!(
            "cluster: domain cluster {} holds {}/{} benchmark documents (share {})",
            d.cluster, d.count, d.total, d.share
        );
    }
    eprintln!(
        "cluster: {} documents in {} clusters, inertia {:.6}",
        emb.len(),
        model.k(),
        model.inertia
    );

    let mut inputs: Vec<&Path> = vec![&emb_path, &ids_path];
    if let Some((p, ids)) = &bench {
        inputs.push(p);
        inputs.push(ids);
    }
    if let Some(w) = &args.weights {
        inputs.push(w);
    }
    let mut manifest = Manifest::new("cluster", &config);
    manifest.inputs = digest_inputs(&inputs)?;
    manifest.outputs = outputs;
    manifest.summary = json!({
        "documents": emb.len(),
        "dim": emb.dim(),
        "inertia": model.inertia,
        "iterations": model.iterations,
        "domain_cluster": domain,
    });
    manifest.write(&out, "manifest.json")?;
    Ok(())
}
