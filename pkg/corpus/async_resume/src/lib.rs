use std::future::Future;
use std::pin::Pin;
use std::task::{Context, Poll, Waker};

async fn compute(x: u32) -> u32 {
    x * 2
}

pub struct Job {
    fut: Pin<Box<dyn Future<Output = u32>>>,
    done: bool,
    last: Option<u32>,
}

impl Job {
    pub fn new(x: u32) -> Self {
        Job { fut: Box::pin(compute(x)), done: false, last: None }
    }

    pub fn step(&mut self) -> Option<u32> {
        if self.done {
            return self.last;
        }
        let mut cx = Context::from_waker(Waker::noop());
        let value = match self.fut.as_mut().poll(&mut cx) {
            Poll::Ready(v) => v,
            Poll::Pending => return None,
        };
        self.last = Some(value);
        if value > 100 {
            return Some(value);
        }
        self.done = true;
        Some(value)
    }
}
