//! Amazon Polly `SynthesizeSpeech` over HTTPS with SigV4 request signing.
//!
//! The referenced credential variable holds
//! `ACCESS_KEY_ID:SECRET_ACCESS_KEY[:SESSION_TOKEN]`. The region is taken
//! from the endpoint host (`polly.<region>.amazonaws.com`).

use chrono::{DateTime, Utc};
use hmac::{Hmac, Mac};
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{http_agent, transport_error, AdapterError, AudioClip, SpeechClientConfig, TextToSpeech};

pub const DEFAULT_ENDPOINT: &str = "https://polly.us-east-1.amazonaws.com";
const SERVICE: &str = "polly";

#[derive(Clone, Debug)]
pub struct PollyTts {
    pub voice_id: String,
    pub output_format: String,
}

impl Default for PollyTts {
    fn default() -> Self {
        Self {
            voice_id: "Joanna".into(),
            output_format: "mp3".into(),
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "PascalCase")]
struct SynthesizeRequest<'a> {
    output_format: &'a str,
    text: &'a str,
    voice_id: &'a str,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AwsCredentials {
    pub access_key_id: String,
    pub secret_access_key: String,
    pub session_token: Option<String>,
}

impl AwsCredentials {
    pub fn parse(raw: &str) -> Result<Self, AdapterError> {
        let mut parts = raw.trim().splitn(3, ':');
        match (parts.next(), parts.next(), parts.next()) {
            (Some(id), Some(secret), token) if !id.is_empty() && !secret.is_empty() => Ok(Self {
                access_key_id: id.into(),
                secret_access_key: secret.into(),
                session_token: token.filter(|t| !t.is_empty()).map(Into::into),
            }),
            _ => Err(AdapterError::Credential(
                "expected ACCESS_KEY_ID:SECRET_ACCESS_KEY[:SESSION_TOKEN]".into(),
            )),
        }
    }
}

/// Region embedded in a `polly.<region>.amazonaws.com` endpoint.
pub fn region_from_endpoint(endpoint: &str) -> Result<String, AdapterError> {
    let host = endpoint
        .split("://")
        .nth(1)
        .unwrap_or(endpoint)
        .split(['/', ':'])
        .next()
        .unwrap_or_default();
    let mut labels = host.split('.');
    match (labels.next(), labels.next()) {
        (Some(SERVICE), Some(region)) if !region.is_empty() => Ok(region.to_string()),
        _ => Err(AdapterError::InvalidConfig(format!(
            "cannot derive region from endpoint {endpoint:?}"
        ))),
    }
}

fn host_of(endpoint: &str) -> &str {
    endpoint
        .split("://")
        .nth(1)
        .unwrap_or(endpoint)
        .split('/')
        .next()
        .unwrap_or_default()
}

fn hmac_sha256(key: &[u8], data: &[u8]) -> Vec<u8> {
    let mut mac = Hmac::<Sha256>::new_from_slice(key).expect("HMAC accepts any key length");
    mac.update(data);
    mac.finalize().into_bytes().to_vec()
}

/// SigV4 signing key for one day, region and service.
pub fn signing_key(secret: &str, date: &str, region: &str, service: &str) -> Vec<u8> {
    let k_date = hmac_sha256(format!("AWS4{secret}").as_bytes(), date.as_bytes());
    let k_region = hmac_sha256(&k_date, region.as_bytes());
    let k_service = hmac_sha256(&k_region, service.as_bytes());
    hmac_sha256(&k_service, b"aws4_request")
}

/// Headers for a signed `POST /v1/speech` request.
pub fn signed_headers(
    creds: &AwsCredentials,
    region: &str,
    host: &str,
    body: &[u8],
    now: DateTime<Utc>,
) -> Vec<(String, String)> {
    let amz_date = now.format("%Y%m%dT%H%M%SZ").to_string();
    let date = now.format("%Y%m%d").to_string();
    let payload_hash = hex::encode(Sha256::digest(body));

    let mut headers = vec![
        ("content-type".to_string(), "application/json".to_string()),
        ("host".to_string(), host.to_string()),
        ("x-amz-date".to_string(), amz_date.clone()),
    ];
    if let Some(token) = &creds.session_token {
        headers.push(("x-amz-security-token".to_string(), token.clone()));
    }
    let canonical_headers: String = headers.iter().map(|(k, v)| format!("{k}:{v}\n")).collect();
    let signed: Vec<&str> = headers.iter().map(|(k, _)| k.as_str()).collect();
    let signed = signed.join(";");
    let canonical_request =
        format!("POST\n/v1/speech\n\n{canonical_headers}\n{signed}\n{payload_hash}");
    let scope = format!("{date}/{region}/{SERVICE}/aws4_request");
    let string_to_sign = format!(
        "AWS4-HMAC-SHA256\n{amz_date}\n{scope}\n{}",
        hex::encode(Sha256::digest(canonical_request.as_bytes()))
    );
    let signature = hex::encode(hmac_sha256(
        &signing_key(&creds.secret_access_key, &date, region, SERVICE),
        string_to_sign.as_bytes(),
    ));
    headers.push((
        "authorization".to_string(),
        format!(
            "AWS4-HMAC-SHA256 Credential={}/{scope}, SignedHeaders={signed}, Signature={signature}",
            creds.access_key_id
        ),
    ));
    headers
}

impl TextToSpeech for PollyTts {
    fn synthesize(&self, text: &str, cfg: &SpeechClientConfig) -> Result<AudioClip, AdapterError> {
        if text.is_empty() {
            return Err(AdapterError::EmptyText);
        }
        cfg.check()?;
        let creds = AwsCredentials::parse(&cfg.credential()?)?;
        let region = region_from_endpoint(&cfg.endpoint)?;
        let body = serde_json::to_vec(&SynthesizeRequest {
            output_format: &self.output_format,
            text,
            voice_id: &self.voice_id,
        })
        .map_err(|e| AdapterError::InvalidConfig(e.to_string()))?;
        let url = format!("{}/v1/speech", cfg.endpoint.trim_end_matches('/'));
        let mut req = http_agent(cfg).post(&url);
        for (k, v) in signed_headers(&creds, &region, host_of(&cfg.endpoint), &body, Utc::now()) {
            if k != "host" {
                req = req.header(k, v);
            }
        }
        let mut resp = req.send(&body[..]).map_err(transport_error)?;
        let status = resp.status();
        let bytes = resp.body_mut().read_to_vec().map_err(transport_error)?;
        if status.is_server_error() {
            return Err(AdapterError::ServiceUnavailable(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(AdapterError::BadResponse(format!(
                "HTTP {status}: {}",
                String::from_utf8_lossy(&bytes)
            )));
        }
        if bytes.is_empty() {
            return Err(AdapterError::BadResponse("empty audio stream".into()));
        }
        Ok(AudioClip::new(bytes, self.output_format.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    #[test]
    fn signing_key_matches_published_vector() {
        // AWS SigV4 documentation example for deriving a signing key
        let key = signing_key(
            "wJalrXUtnFEMI/K7MDENG+bPxRfiCYEXAMPLEKEY",
            "20120215",
            "us-east-1",
            "iam",
        );
        assert_eq!(
            hex::encode(key),
            "f4780e2d9f65fa895f9c67b32ce1baf0b0d8a43505a000a1a9e090d414db404d"
        );
    }

    #[test]
    fn credentials_and_region() {
        let c = AwsCredentials::parse("AKID:secret").unwrap();
        assert_eq!(c.session_token, None);
        let c = AwsCredentials::parse("AKID:secret:tok").unwrap();
        assert_eq!(c.session_token.as_deref(), Some("tok"));
        assert!(AwsCredentials::parse("nocolon").is_err());
        assert_eq!(region_from_endpoint(DEFAULT_ENDPOINT).unwrap(), "us-east-1");
        assert_eq!(region_from_endpoint("https://polly.eu-west-2.amazonaws.com/").unwrap(), "eu-west-2");
        assert!(region_from_endpoint("http://127.0.0.1:9").is_err());
    }

    #[test]
    fn authorization_header_layout() {
        let creds = AwsCredentials::parse("AKIDEXAMPLE:secret").unwrap();
        let now = Utc.with_ymd_and_hms(2024, 3, 9, 12, 0, 0).unwrap();
        let headers = signed_headers(&creds, "us-east-1", "polly.us-east-1.amazonaws.com", b"{}", now);
        let auth = &headers.iter().find(|(k, _)| k == "authorization").unwrap().1;
        assert!(auth.starts_with(
            "AWS4-HMAC-SHA256 Credential=AKIDEXAMPLE/20240309/us-east-1/polly/aws4_request, SignedHeaders=content-type;host;x-amz-date, Signature="
        ));
        assert_eq!(auth.rsplit('=').next().unwrap().len(), 64);
        let again = signed_headers(&creds, "us-east-1", "polly.us-east-1.amazonaws.com", b"{}", now);
        assert_eq!(headers, again);
    }
}
