//! In-process topic bus with per-topic FIFO broadcast delivery.
//!
//! Publishing assigns a per-topic sequence number starting at 1 and copies the
//! envelope into every subscription alive at that moment. Late subscribers see
//! nothing published before they subscribed. A bus-wide [`Monitor`] observes
//! every topic in global publish order, which is what the event log uses.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::{Arc, Condvar, Mutex, MutexGuard, Weak};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::messages::{Payload, PayloadKind, STANDARD_TOPICS};

/// Queue depth at which a subscription logs a warning. Delivery never drops.
pub const HIGH_WATER_MARK: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BusError {
    #[error("invalid topic name {0:?}")]
    InvalidTopic(String),
    #[error("unknown topic {0}")]
    UnknownTopic(TopicName),
    #[error("topic {topic} carries {expected:?}, got {got:?}")]
    PayloadKindMismatch {
        topic: TopicName,
        expected: PayloadKind,
        got: PayloadKind,
    },
    #[error("topic {topic} already registered as {existing:?}, cannot register as {requested:?}")]
    ConflictingRegistration {
        topic: TopicName,
        existing: PayloadKind,
        requested: PayloadKind,
    },
}

/// Dot-separated topic name, each segment `[a-z0-9]+`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TopicName(String);

impl TopicName {
    pub fn new(name: impl Into<String>) -> Result<Self, BusError> {
        let name = name.into();
        let valid = !name.is_empty()
            && name.split('.').all(|seg| {
                !seg.is_empty() && seg.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit())
            });
        if valid {
            Ok(Self(name))
        } else {
            Err(BusError::InvalidTopic(name))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for TopicName {
    type Error = BusError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        Self::new(s)
    }
}

impl TryFrom<&str> for TopicName {
    type Error = BusError;

    fn try_from(s: &str) -> Result<Self, Self::Error> {
        Self::new(s)
    }
}

impl From<TopicName> for String {
    fn from(t: TopicName) -> Self {
        t.0
    }
}

impl fmt::Display for TopicName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A published message as delivered to subscribers.
#[derive(Clone, Debug, PartialEq)]
pub struct Envelope {
    pub topic: TopicName,
    /// Per-topic sequence number, starting at 1.
    pub seq: u64,
    /// Bus-wide publish order, starting at 1.
    pub ordinal: u64,
    pub payload: Payload,
}

#[derive(Default)]
struct QueueState {
    items: VecDeque<Envelope>,
    warned: bool,
}

struct Queue {
    label: String,
    state: Mutex<QueueState>,
    ready: Condvar,
}

impl Queue {
    fn new(label: String) -> Arc<Self> {
        Arc::new(Self {
            label,
            state: Mutex::new(QueueState::default()),
            ready: Condvar::new(),
        })
    }

    fn lock(&self) -> MutexGuard<'_, QueueState> {
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn push(&self, env: Envelope) {
        let mut st = self.lock();
        st.items.push_back(env);
        if st.items.len() >= HIGH_WATER_MARK && !st.warned {
            st.warned = true;
            log::warn!(
                "subscription on {} has {} undelivered messages",
                self.label,
                st.items.len()
            );
        }
        drop(st);
        self.ready.notify_all();
    }

    fn pop(&self) -> Option<Envelope> {
        let mut st = self.lock();
        let env = st.items.pop_front();
        if st.items.len() < HIGH_WATER_MARK / 2 {
            st.warned = false;
        }
        env
    }

    fn pop_timeout(&self, timeout: Duration) -> Option<Envelope> {
        let deadline = Instant::now() + timeout;
        let mut st = self.lock();
        loop {
            if let Some(env) = st.items.pop_front() {
                return Some(env);
            }
            let now = Instant::now();
            if now >= deadline {
                return None;
            }
            st = self
                .ready
                .wait_timeout(st, deadline - now)
                .unwrap_or_else(|p| p.into_inner())
                .0;
        }
    }

    fn len(&self) -> usize {
        self.lock().items.len()
    }
}

struct TopicState {
    kind: PayloadKind,
    last_seq: u64,
    subscribers: Vec<Weak<Queue>>,
}

#[derive(Default)]
struct BusState {
    topics: HashMap<TopicName, TopicState>,
    monitors: Vec<Weak<Queue>>,
    last_ordinal: u64,
}

/// Cheaply cloneable handle to a shared bus.
#[derive(Clone, Default)]
pub struct Bus {
    state: Arc<Mutex<BusState>>,
}

impl fmt::Debug for Bus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let st = self.lock();
        f.debug_struct("Bus")
            .field("topics", &st.topics.len())
            .field("published", &st.last_ordinal)
            .finish()
    }
}

impl Bus {
    pub fn new() -> Self {
        Self::default()
    }

    /// Bus with the five pipeline topics already registered.
    pub fn with_standard_topics() -> Self {
        let bus = Self::new();
        for (name, kind) in STANDARD_TOPICS {
            bus.register_topic(&TopicName::new(name).expect("static topic name"), kind)
                .expect("fresh bus");
        }
        bus
    }

    fn lock(&self) -> MutexGuard<'_, BusState> {
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }

    /// Registers `topic` for payloads of `kind`. Re-registering with the same
    /// kind is a no-op.
    pub fn register_topic(&self, topic: &TopicName, kind: PayloadKind) -> Result<(), BusError> {
        let mut st = self.lock();
        match st.topics.get(topic) {
            Some(existing) if existing.kind != kind => Err(BusError::ConflictingRegistration {
                topic: topic.clone(),
                existing: existing.kind,
                requested: kind,
            }),
            Some(_) => Ok(()),
            None => {
                st.topics.insert(
                    topic.clone(),
                    TopicState {
                        kind,
                        last_seq: 0,
                        subscribers: Vec::new(),
                    },
                );
                Ok(())
            }
        }
    }

    pub fn topic_kind(&self, topic: &TopicName) -> Option<PayloadKind> {
        self.lock().topics.get(topic).map(|t| t.kind)
    }

    /// Publishes `payload` to every current subscriber of `topic` and returns
    /// the assigned per-topic sequence number.
    pub fn publish(&self, topic: &TopicName, payload: Payload) -> Result<u64, BusError> {
        let mut guard = self.lock();
        let st = &mut *guard;
        let entry = st
            .topics
            .get_mut(topic)
            .ok_or_else(|| BusError::UnknownTopic(topic.clone()))?;
        if entry.kind != payload.kind() {
            return Err(BusError::PayloadKindMismatch {
                topic: topic.clone(),
                expected: entry.kind,
                got: payload.kind(),
            });
        }
        entry.last_seq += 1;
        st.last_ordinal += 1;
        let env = Envelope {
            topic: topic.clone(),
            seq: entry.last_seq,
            ordinal: st.last_ordinal,
            payload,
        };
        // Delivery happens under the bus lock so a concurrent subscribe either
        // precedes this message entirely or misses it entirely.
        entry.subscribers.retain(|w| match w.upgrade() {
            Some(q) => {
                q.push(env.clone());
                true
            }
            None => false,
        });
        st.monitors.retain(|w| match w.upgrade() {
            Some(q) => {
                q.push(env.clone());
                true
            }
            None => false,
        });
        Ok(env.seq)
    }

    /// Convenience wrapper taking a topic name string.
    pub fn publish_to(&self, topic: &str, payload: Payload) -> Result<u64, BusError> {
        self.publish(&TopicName::new(topic)?, payload)
    }

    pub fn subscribe(&self, topic: &TopicName) -> Result<Subscription, BusError> {
        let mut st = self.lock();
        let entry = st
            .topics
            .get_mut(topic)
            .ok_or_else(|| BusError::UnknownTopic(topic.clone()))?;
        let queue = Queue::new(topic.to_string());
        entry.subscribers.push(Arc::downgrade(&queue));
        Ok(Subscription {
            topic: topic.clone(),
            queue,
        })
    }

    pub fn subscribe_to(&self, topic: &str) -> Result<Subscription, BusError> {
        self.subscribe(&TopicName::new(topic)?)
    }

    /// Observer of every topic, in bus-wide publish order.
    pub fn monitor(&self) -> Monitor {
        let queue = Queue::new("*".into());
        self.lock().monitors.push(Arc::downgrade(&queue));
        Monitor { queue }
    }
}

/// Receiving end for one topic. Dropping it unsubscribes.
pub struct Subscription {
    topic: TopicName,
    queue: Arc<Queue>,
}

impl fmt::Debug for Subscription {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Subscription")
            .field("topic", &self.topic)
            .field("pending", &self.queue.len())
            .finish()
    }
}

impl Subscription {
    pub fn topic(&self) -> &TopicName {
        &self.topic
    }

    pub fn try_recv(&self) -> Option<Envelope> {
        self.queue.pop()
    }

    /// Blocks up to `timeout` for the next envelope.
    pub fn recv_timeout(&self, timeout: Duration) -> Option<Envelope> {
        self.queue.pop_timeout(timeout)
    }

    pub fn drain(&self) -> Vec<Envelope> {
        std::iter::from_fn(|| self.try_recv()).collect()
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }
}

/// Receives every envelope published on the bus after its creation.
pub struct Monitor {
    queue: Arc<Queue>,
}

impl Monitor {
    pub fn try_recv(&self) -> Option<Envelope> {
        self.queue.pop()
    }

    pub fn recv_timeout(&self, timeout: Duration) -> Option<Envelope> {
        self.queue.pop_timeout(timeout)
    }

    pub fn drain(&self) -> Vec<Envelope> {
        std::iter::from_fn(|| self.try_recv()).collect()
    }
}

/// Drains several subscriptions and returns their envelopes in bus-wide
/// publish order.
pub fn drain_merged(subs: &[&Subscription]) -> Vec<Envelope> {
    let mut all: Vec<Envelope> = subs.iter().flat_map(|s| s.drain()).collect();
    all.sort_by_key(|e| e.ordinal);
    all
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::messages::{SpeechOutMsg, StopMsg};

    fn say(text: &str) -> Payload {
        Payload::SpeechOut(SpeechOutMsg { text: text.into() })
    }

    fn topic(s: &str) -> TopicName {
        TopicName::new(s).unwrap()
    }

    #[test]
    fn topic_name_rules() {
        assert!(TopicName::new("nav.goal").is_ok());
        assert!(TopicName::new("robot2.state").is_ok());
        for bad in ["", "Nav.goal", "nav..goal", ".nav", "nav.", "nav goal", "nav-goal"] {
            assert!(TopicName::new(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn first_publish_gets_seq_one() {
        let bus = Bus::with_standard_topics();
        let sub = bus.subscribe_to("speech.say").unwrap();
        assert_eq!(bus.publish_to("speech.say", say("a")).unwrap(), 1);
        assert_eq!(bus.publish_to("speech.say", say("b")).unwrap(), 2);
        let got: Vec<_> = sub.drain().into_iter().map(|e| e.seq).collect();
        assert_eq!(got, vec![1, 2]);
    }

    #[test]
    fn publish_without_subscribers_still_counts() {
        let bus = Bus::with_standard_topics();
        assert_eq!(bus.publish_to("speech.say", say("lost")).unwrap(), 1);
        let sub = bus.subscribe_to("speech.say").unwrap();
        assert_eq!(bus.publish_to("speech.say", say("kept")).unwrap(), 2);
        let got = sub.drain();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].payload, say("kept"));
    }

    #[test]
    fn broadcast_to_all_subscribers() {
        let bus = Bus::with_standard_topics();
        let a = bus.subscribe_to("speech.say").unwrap();
        let b = bus.subscribe_to("speech.say").unwrap();
        bus.publish_to("speech.say", say("x")).unwrap();
        bus.publish_to("speech.say", say("y")).unwrap();
        assert_eq!(a.drain(), b.drain());
    }

    #[test]
    fn unknown_topic_and_kind_mismatch() {
        let bus = Bus::with_standard_topics();
        assert!(matches!(
            bus.publish_to("nav.nowhere", say("x")),
            Err(BusError::UnknownTopic(_))
        ));
        assert!(matches!(bus.subscribe_to("nav.nowhere"), Err(BusError::UnknownTopic(_))));
        assert!(matches!(
            bus.publish_to("nav.goal", Payload::Stop(StopMsg {})),
            Err(BusError::PayloadKindMismatch { .. })
        ));
    }

    #[test]
    fn registration_is_idempotent_per_kind() {
        let bus = Bus::new();
        let t = topic("nav.goal");
        bus.register_topic(&t, PayloadKind::Goal).unwrap();
        bus.register_topic(&t, PayloadKind::Goal).unwrap();
        assert!(matches!(
            bus.register_topic(&t, PayloadKind::State),
            Err(BusError::ConflictingRegistration { .. })
        ));
    }

    #[test]
    fn dropped_subscription_is_pruned() {
        let bus = Bus::with_standard_topics();
        let sub = bus.subscribe_to("speech.say").unwrap();
        drop(sub);
        bus.publish_to("speech.say", say("x")).unwrap();
        let st = bus.lock();
        assert!(st.topics[&topic("speech.say")].subscribers.is_empty());
    }

    #[test]
    fn monitor_sees_global_order() {
        let bus = Bus::with_standard_topics();
        let mon = bus.monitor();
        bus.publish_to("speech.say", say("x")).unwrap();
        bus.publish_to("nav.stop", Payload::Stop(StopMsg {})).unwrap();
        bus.publish_to("speech.say", say("y")).unwrap();
        let got: Vec<_> = mon.drain().into_iter().map(|e| (e.topic.to_string(), e.seq, e.ordinal)).collect();
        assert_eq!(
            got,
            vec![
                ("speech.say".into(), 1, 1),
                ("nav.stop".into(), 1, 2),
                ("speech.say".into(), 2, 3)
            ]
        );
    }

    #[test]
    fn concurrent_publishers_keep_per_topic_order() {
        let bus = Bus::with_standard_topics();
        let sub = bus.subscribe_to("speech.say").unwrap();
        let handles: Vec<_> = (0..4)
            .map(|i| {
                let bus = bus.clone();
                std::thread::spawn(move || {
                    for j in 0..250 {
                        bus.publish_to("speech.say", say(&format!("{i}-{j}"))).unwrap();
                    }
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        let seqs: Vec<u64> = sub.drain().into_iter().map(|e| e.seq).collect();
        assert_eq!(seqs, (1..=1000).collect::<Vec<_>>());
    }

    #[test]
    fn recv_timeout_wakes_on_publish() {
        let bus = Bus::with_standard_topics();
        let sub = bus.subscribe_to("speech.say").unwrap();
        let publisher = bus.clone();
        let h = std::thread::spawn(move || {
            std::thread::sleep(Duration::from_millis(20));
            publisher.publish_to("speech.say", say("late")).unwrap();
        });
        let env = sub.recv_timeout(Duration::from_secs(5)).expect("woken");
        assert_eq!(env.payload, say("late"));
        h.join().unwrap();
        assert!(sub.recv_timeout(Duration::from_millis(5)).is_none());
    }
}
