//! Web search over a JSON provider API, mapped onto [`Document`]s.

use std::collections::BTreeSet;

use hgmcts_core::{BackendError, Document, SearchBackend};
use serde_json::Value;

use crate::config::{ResultMapping, SearchEndpointConfig};
use crate::limiter::ConcurrencyLimiter;
use crate::secret::SecretString;
use crate::transport::Transport;

#[derive(Debug, Clone)]
pub struct WebSearchClient {
    config: SearchEndpointConfig,
    transport: Transport,
}

impl WebSearchClient {
    pub fn new(config: &SearchEndpointConfig, limiter: ConcurrencyLimiter) -> Result<Self, BackendError> {
        let secret = config.resolve_api_key()?;
        Self::with_secret(config, secret, limiter)
    }

    pub fn with_secret(
        config: &SearchEndpointConfig,
        secret: Option<SecretString>,
        limiter: ConcurrencyLimiter,
    ) -> Result<Self, BackendError> {
        config.validate()?;
        let transport = Transport::new(
            config.timeout(),
            limiter,
            secret,
            config.max_retries,
            &config.retry_backoff_ms,
            "search endpoint",
        )?;
        Ok(Self {
            config: config.clone(),
            transport,
        })
    }

    pub fn web_search(&self, subquery: &str, top_k: usize) -> Result<Vec<Document>, BackendError> {
        let count = top_k.to_string();
        let secret = self.transport.secret.clone();
        let body = self.transport.send(
            |http| {
                let mut params = vec![
                    (self.config.query_param.as_str(), subquery),
                    (self.config.count_param.as_str(), count.as_str()),
                ];
                let mut req = http.get(&self.config.base_url);
                match (&secret, &self.config.api_key_param) {
                    (Some(s), Some(param)) => params.push((param.as_str(), s.expose())),
                    (Some(s), None) => req = req.bearer_auth(s.expose()),
                    (None, _) => {}
                }
                req.query(&params)
            },
            subquery.len(),
        )?;
        let value: Value = serde_json::from_str(&body).map_err(|e| {
            BackendError::Unavailable(format!("search provider returned malformed JSON: {e}"))
        })?;
        map_results(&value, &self.config.mapping, top_k)
    }
}

fn lookup<'a>(value: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.')
        .filter(|p| !p.is_empty())
        .try_fold(value, |v, key| v.get(key))
}

fn field(hit: &Value, key: &str) -> String {
    lookup(hit, key)
        .and_then(Value::as_str)
        .map(|s| s.trim().to_string())
        .unwrap_or_default()
}

/// Provider JSON to documents in provider order. A missing result array
/// means no hits; a result array of the wrong shape is a provider error.
pub fn map_results(value: &Value, mapping: &ResultMapping, top_k: usize) -> Result<Vec<Document>, BackendError> {
    if !value.is_object() {
        return Err(BackendError::Unavailable("search provider reply is not a JSON object".into()));
    }
    let hits = match lookup(value, &mapping.results) {
        None | Some(Value::Null) => return Ok(Vec::new()),
        Some(Value::Array(hits)) => hits,
        Some(_) => {
            return Err(BackendError::Unavailable(format!(
                "search provider field {:?} is not a list",
                mapping.results
            )))
        }
    };
    let mut seen = BTreeSet::new();
    let mut docs = Vec::new();
    for hit in hits {
        if docs.len() == top_k {
            break;
        }
        let link = field(hit, &mapping.link);
        let content = Some(field(hit, &mapping.content))
            .filter(|c| !c.is_empty())
            .unwrap_or_else(|| field(hit, &mapping.snippet));
        if link.is_empty() || content.is_empty() || !seen.insert(link.clone()) {
            continue;
        }
        docs.push(Document {
            doc_id: link.clone(),
            title: field(hit, &mapping.title),
            locator: link,
            content,
        });
    }
    Ok(docs)
}

impl SearchBackend for WebSearchClient {
    fn name(&self) -> String {
        format!("web-search:{}", self.config.base_url)
    }

    fn search(&self, subquery: &str, top_k: usize) -> Result<Vec<Document>, BackendError> {
        self.web_search(subquery, top_k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn maps_hits_with_snippet_fallback() {
        let v = json!({ "items": [
            { "title": "A", "link": "https://a.org", "snippet": "sa", "content": "full a" },
            { "title": "B", "link": "https://b.org", "snippet": "sb" },
            { "title": "A again", "link": "https://a.org", "snippet": "dup" },
            { "title": "C", "link": "https://c.org", "snippet": "sc" },
        ]});
        let docs = map_results(&v, &ResultMapping::default(), 3).unwrap();
        let got: Vec<_> = docs.iter().map(|d| (d.doc_id.as_str(), d.content.as_str())).collect();
        assert_eq!(got, [("https://a.org", "full a"), ("https://b.org", "sb"), ("https://c.org", "sc")]);
    }

    #[test]
    fn nested_paths_and_missing_results() {
        let mapping = ResultMapping {
            results: "data.web".into(),
            link: "url".into(),
            ..Default::default()
        };
        let v = json!({ "data": { "web": [ { "url": "u", "snippet": "s" } ] } });
        assert_eq!(map_results(&v, &mapping, 3).unwrap().len(), 1);
        assert!(map_results(&json!({}), &mapping, 3).unwrap().is_empty());
        assert!(map_results(&json!({ "data": { "web": 5 } }), &mapping, 3).is_err());
        assert!(map_results(&json!([1, 2]), &mapping, 3).is_err());
    }
}
