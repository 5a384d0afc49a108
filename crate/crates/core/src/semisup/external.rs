//! The line-oriented external decoder protocol.
//!
//! Request, one per line on the decoder's standard input:
//!
//! ```text
//! <utt_id>\t<pair>
//! ```
//!
//! Response, one per line on its standard output:
//!
//! ```text
//! <utt_id>\t<pair>\t<confidence>\t<surface>/<lang> <surface>/<lang> ...
//! ```
//!
//! The hypothesis field is empty for an empty hypothesis. Timeouts and
//! malformed responses are fatal for the pass. [`serve_lines`] implements
//! the server side over any [`DecoderInterface`], which is how the
//! simulator is exposed as a subprocess.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver};
use std::sync::Mutex;
use std::time::Duration;

use crate::corpus::{Corpus, LangTag, Token, Utterance};

use super::pipeline::{DecoderInterface, ModelRole, TrainSet, TrainSummary, TrainerInterface};
use super::{DecodeResult, PairId, SemisupError};

fn proto_err(msg: impl Into<String>) -> SemisupError {
    SemisupError::Protocol(msg.into())
}

/// Format one response line.
pub fn format_response(result: &DecodeResult) -> String {
    let tokens: Vec<String> = result.hyp_tokens.iter().map(Token::to_string).collect();
    format!(
        "{}\t{}\t{}\t{}",
        result.utt_id,
        result.pair,
        result.utt_confidence(),
        tokens.join(" ")
    )
}

/// Parse one response line into a decode result.
pub fn parse_response(line: &str) -> Result<DecodeResult, SemisupError> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 4 {
        return Err(proto_err(format!(
            "expected 4 tab-separated fields, got {}: `{line}`",
            fields.len()
        )));
    }
    let pair = PairId::new(fields[1])?;
    let conf: f64 = fields[2]
        .parse()
        .map_err(|_| proto_err(format!("bad confidence `{}`", fields[2])))?;
    let mut tokens = Vec::new();
    for tok in fields[3].split_whitespace() {
        let (surface, lang) = tok
            .rsplit_once('/')
            .ok_or_else(|| proto_err(format!("token `{tok}` has no /lang tag")))?;
        let lang = LangTag::new(lang).map_err(proto_err)?;
        tokens.push(Token::new(surface, lang).map_err(proto_err)?);
    }
    DecodeResult::from_utt_confidence(fields[0], pair, tokens, conf)
}

/// Serve decode requests over buffered streams until end of input.
pub fn serve_lines<D: DecoderInterface>(
    decoder: &D,
    corpus: &Corpus,
    input: impl BufRead,
    mut output: impl Write,
) -> Result<(), SemisupError> {
    for line in input.lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let (utt_id, pair) = trimmed
            .split_once('\t')
            .ok_or_else(|| proto_err(format!("bad request `{trimmed}`")))?;
        let pair = PairId::new(pair)?;
        let utt = corpus
            .get(utt_id)
            .ok_or_else(|| proto_err(format!("unknown utterance `{utt_id}`")))?;
        let result = decoder.decode(utt, &pair)?;
        writeln!(output, "{}", format_response(&result))?;
        output.flush()?;
    }
    Ok(())
}

struct ProtocolClient {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

/// A decoder behind the line protocol, running as a child process.
///
/// Requests are serialized through a mutex, so the wrapper is safe to share
/// across decoding threads even though the underlying channel is a single
/// pipe pair.
pub struct ExternalDecoder {
    client: Mutex<ProtocolClient>,
    timeout: Duration,
}

impl ExternalDecoder {
    /// Spawn `cmd` and speak the protocol over its standard streams.
    pub fn spawn(cmd: &[String], timeout: Duration) -> Result<Self, SemisupError> {
        let (program, args) = cmd
            .split_first()
            .ok_or_else(|| SemisupError::Config("empty decoder command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| SemisupError::Config(format!("cannot spawn decoder `{program}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            let reader = BufReader::new(stdout);
            for line in reader.lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(ExternalDecoder {
            client: Mutex::new(ProtocolClient {
                child,
                stdin,
                lines: rx,
            }),
            timeout,
        })
    }
}

impl DecoderInterface for ExternalDecoder {
    fn decode(&self, utterance: &Utterance, pair: &PairId) -> Result<DecodeResult, SemisupError> {
        let mut client = self
            .client
            .lock()
            .map_err(|_| proto_err("decoder channel poisoned"))?;
        writeln!(client.stdin, "{}\t{}", utterance.id, pair)?;
        client.stdin.flush()?;
        let line = client
            .lines
            .recv_timeout(self.timeout)
            .map_err(|_| proto_err(format!("decoder timed out on `{}`", utterance.id)))??;
        let result = parse_response(&line)?;
        if result.utt_id != utterance.id || &result.pair != pair {
            return Err(proto_err(format!(
                "response for `{}`/{} does not echo request `{}`/{}",
                result.utt_id, result.pair, utterance.id, pair
            )));
        }
        Ok(result)
    }
}

impl Drop for ExternalDecoder {
    fn drop(&mut self) {
        if let Ok(mut client) = self.client.lock() {
            let _ = client.child.kill();
            let _ = client.child.wait();
        }
    }
}

/// A trainer that trains nothing: for external decoders whose training
/// happens out of band. Summaries still record the composed train set.
pub struct NoopTrainer;

impl TrainerInterface for NoopTrainer {
    fn train(
        &mut self,
        _role: ModelRole,
        _pass: u32,
        trainset: &TrainSet<'_>,
    ) -> Result<TrainSummary, SemisupError> {
        Ok(TrainSummary {
            hours: trainset.total_duration_s()? / 3600.0,
            detail: serde_json::Value::Null,
        })
    }
}
