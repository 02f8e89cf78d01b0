use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use levelset_core::{
    rasterize_seeds, BinaryMask, Evolution, EvolutionParams, ScalarField, SeedSpec,
};
use tokio::sync::Mutex as AsyncMutex;
use uuid::Uuid;

/// One operator's image and the evolution seeded on it.
#[derive(Debug)]
pub struct Session {
    pub image: ScalarField,
    pub seeds: Option<SeedSpec>,
    /// Created by the first run after seeding.
    pub evolution: Option<Evolution>,
    pub last_used: Instant,
}

impl Session {
    pub fn new(image: ScalarField) -> Self {
        Self {
            image,
            seeds: None,
            evolution: None,
            last_used: Instant::now(),
        }
    }

    pub fn iter(&self) -> usize {
        self.evolution.as_ref().map_or(0, |e| e.state().iter)
    }

    pub fn params(&self) -> Option<&EvolutionParams> {
        self.evolution.as_ref().map(|e| e.params())
    }

    /// Current level-set function and object mask; the seed rasterization
    /// before the first run.
    pub fn snapshot(&self) -> Option<(ScalarField, BinaryMask)> {
        if let Some(evo) = &self.evolution {
            return Some((evo.state().phi.clone(), evo.mask()));
        }
        let seeds = self.seeds.as_ref()?;
        let (w, h) = self.image.dims();
        let phi = rasterize_seeds(seeds, w, h).ok()?;
        let mask = BinaryMask::from_sign(&phi, seeds.inside_sign);
        Some((phi, mask))
    }
}

pub type SessionHandle = Arc<AsyncMutex<Session>>;

/// Sessions by id. The map lock is held only for lookups; each session has
/// its own lock so runs on different sessions proceed independently.
#[derive(Debug, Default)]
pub struct SessionStore {
    sessions: Mutex<HashMap<Uuid, SessionHandle>>,
}

impl SessionStore {
    pub fn insert(&self, session: Session) -> Uuid {
        let id = Uuid::new_v4();
        self.sessions
            .lock()
            .unwrap()
            .insert(id, Arc::new(AsyncMutex::new(session)));
        id
    }

    pub fn get(&self, id: &str) -> Option<SessionHandle> {
        let id = Uuid::parse_str(id).ok()?;
        self.sessions.lock().unwrap().get(&id).cloned()
    }

    pub fn len(&self) -> usize {
        self.sessions.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Drops sessions idle for longer than `ttl`. Sessions busy in a
    /// request are kept.
    pub fn purge_idle(&self, ttl: Duration) -> usize {
        let mut map = self.sessions.lock().unwrap();
        let before = map.len();
        map.retain(|_, s| match s.try_lock() {
            Ok(guard) => guard.last_used.elapsed() <= ttl,
            Err(_) => true,
        });
        before - map.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use levelset_core::{Polygon, Sign};

    #[test]
    fn snapshot_follows_the_protocol() {
        let mut s = Session::new(ScalarField::filled(16, 16, 0.5).unwrap());
        assert!(s.snapshot().is_none());
        s.seeds = Some(SeedSpec::new(vec![Polygon::rect(4.0, 4.0, 8.0, 8.0)], Sign::Positive));
        let (phi, mask) = s.snapshot().unwrap();
        assert_eq!(mask.count(), 16);
        assert_eq!(phi.get(5, 5), 1.0);
        assert_eq!(s.iter(), 0);
    }

    #[test]
    fn store_lookup() {
        let store = SessionStore::default();
        let id = store.insert(Session::new(ScalarField::filled(4, 4, 0.0).unwrap()));
        assert!(store.get(&id.to_string()).is_some());
        assert!(store.get("nope").is_none());
        assert!(store.get(&Uuid::new_v4().to_string()).is_none());
        assert_eq!(store.len(), 1);
    }
}
