//! HTTP intake endpoint over the shared store. Runs until interrupted;
//! everything it accepts lands in the same layout `generate` writes.

use std::sync::Arc;

use anyhow::{Context, Result};

use hscreen_ingest::IngestService;

use crate::config::PipelineConfig;
use crate::paths::DataRoot;

pub fn run(cfg: &PipelineConfig, addr: &str) -> Result<String> {
    let root = DataRoot::new(&cfg.data_dir);
    let service = Arc::new(IngestService::open(&root.store())?);
    let runtime = tokio::runtime::Builder::new_current_thread()
        .enable_all()
        .build()
        .context("starting the async runtime")?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .with_context(|| format!("binding {addr}"))?;
        println!(
            "serve: intake listening on {}, store {}",
            listener.local_addr().context("reading the bound address")?,
            root.store().display()
        );
        axum::serve(listener, hscreen_ingest::router(service))
            .await
            .context("serving the intake API")
    })?;
    Ok("serve: stopped".into())
}
