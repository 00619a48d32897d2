//! Bridge to an external trainer over newline-delimited JSON.
//!
//! Wire protocol, one UTF-8 line per message on the child's stdin/stdout:
//!
//! ```text
//! -> {"id":1,"genotype":"40-30-.../...","epochs":1}
//! <- {"id":1,"error":0.31,"params_m":2.1,"flops_m":310.0,"cost_units":12.5}
//! ```
//!
//! `params_m`/`flops_m` may be `null`. The child must flush after every
//! response. A pool of identical worker processes is kept, one in-flight
//! request per process; batches are split round-robin so results are
//! deterministic regardless of worker timing.

use super::{EvalError, EvaluationRequest, EvaluationResult, Evaluator};
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{Receiver, RecvTimeoutError};
use std::time::Duration;

struct Worker {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl Worker {
    fn spawn(command: &[String]) -> Result<Worker, EvalError> {
        let (program, args) = command.split_first().expect("command validated non-empty");
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|source| EvalError::Spawn { command: command.join(" "), source })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = std::sync::mpsc::channel();
        std::thread::spawn(move || {
            let reader = BufReader::new(stdout);
            for line in reader.lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Worker { child, stdin, lines: rx })
    }

    fn exchange(
        &mut self,
        request: &EvaluationRequest,
        timeout: Duration,
    ) -> Result<EvaluationResult, EvalError> {
        let line = serde_json::to_string(request).expect("request serializes");
        if self.stdin.write_all(line.as_bytes()).is_err()
            || self.stdin.write_all(b"\n").is_err()
            || self.stdin.flush().is_err()
        {
            return Err(self.exit_error());
        }
        let response = match self.lines.recv_timeout(timeout) {
            Ok(Ok(line)) => line,
            Ok(Err(io)) => {
                return Err(EvalError::Malformed {
                    detail: format!("read failed: {io}"),
                    payload: String::new(),
                })
            }
            Err(RecvTimeoutError::Timeout) => {
                return Err(EvalError::Timeout {
                    id: request.id,
                    timeout_ms: timeout.as_millis() as u64,
                })
            }
            Err(RecvTimeoutError::Disconnected) => return Err(self.exit_error()),
        };
        let result: EvaluationResult =
            serde_json::from_str(&response).map_err(|e| EvalError::Malformed {
                detail: e.to_string(),
                payload: response.clone(),
            })?;
        result.validate(request.id)?;
        Ok(result)
    }

    fn exit_error(&mut self) -> EvalError {
        // give a crashing child a moment to report its status
        std::thread::sleep(Duration::from_millis(20));
        let status = self.child.try_wait().ok().flatten().and_then(|s| s.code());
        EvalError::WorkerExited { status }
    }
}

impl Drop for Worker {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Evaluator backed by a pool of external worker processes.
pub struct ExternalEvaluator {
    command: Vec<String>,
    workers: Vec<Worker>,
    pool_size: usize,
    timeout: Duration,
}

impl ExternalEvaluator {
    /// `command` is argv for each worker. Workers spawn lazily on first
    /// use so constructing the evaluator never fails.
    pub fn new(command: Vec<String>, pool_size: usize, timeout: Duration) -> ExternalEvaluator {
        assert!(!command.is_empty(), "external evaluator needs a command");
        ExternalEvaluator {
            command,
            workers: Vec::new(),
            pool_size: pool_size.max(1),
            timeout,
        }
    }

    fn ensure_workers(&mut self, needed: usize) -> Result<(), EvalError> {
        while self.workers.len() < needed.min(self.pool_size).max(1) {
            self.workers.push(Worker::spawn(&self.command)?);
        }
        Ok(())
    }

    /// Replace a dead worker so one failure does not poison the pool.
    fn respawn(&mut self, index: usize) {
        if let Ok(worker) = Worker::spawn(&self.command) {
            self.workers[index] = worker;
        }
    }
}

impl Evaluator for ExternalEvaluator {
    fn name(&self) -> &'static str {
        "external"
    }

    fn evaluate(&mut self, request: &EvaluationRequest) -> Result<EvaluationResult, EvalError> {
        self.ensure_workers(1)?;
        let result = self.workers[0].exchange(request, self.timeout);
        if matches!(result, Err(EvalError::WorkerExited { .. }) | Err(EvalError::Timeout { .. })) {
            self.respawn(0);
        }
        result
    }

    fn evaluate_batch(
        &mut self,
        requests: &[EvaluationRequest],
    ) -> Vec<Result<EvaluationResult, EvalError>> {
        if requests.is_empty() {
            return Vec::new();
        }
        if let Err(e) = self.ensure_workers(requests.len()) {
            return vec![Err(e)];
        }
        let pool = self.workers.len();
        let timeout = self.timeout;
        let mut slots: Vec<Option<Result<EvaluationResult, EvalError>>> =
            (0..requests.len()).map(|_| None).collect();
        let mut failed_workers: Vec<usize> = Vec::new();
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            // round-robin split: worker w takes requests w, w+pool, ...
            let mut slot_refs: Vec<Vec<&mut Option<Result<EvaluationResult, EvalError>>>> =
                (0..pool).map(|_| Vec::new()).collect();
            for (i, slot) in slots.iter_mut().enumerate() {
                slot_refs[i % pool].push(slot);
            }
            for (w, (worker, my_slots)) in
                self.workers.iter_mut().zip(slot_refs).enumerate()
            {
                let requests = &requests;
                handles.push(scope.spawn(move || {
                    let mut died = false;
                    for (k, slot) in my_slots.into_iter().enumerate() {
                        let request = &requests[k * pool + w];
                        let result = worker.exchange(request, timeout);
                        died |= matches!(
                            result,
                            Err(EvalError::WorkerExited { .. }) | Err(EvalError::Timeout { .. })
                        );
                        *slot = Some(result);
                    }
                    (w, died)
                }));
            }
            for handle in handles {
                if let Ok((w, died)) = handle.join() {
                    if died {
                        failed_workers.push(w);
                    }
                }
            }
        });
        for w in failed_workers {
            self.respawn(w);
        }
        slots.into_iter().map(|s| s.expect("all slots filled")).collect()
    }
}
