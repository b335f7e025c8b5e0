type Timer = {
  id: number;
  due: number;
  seq: number;
  fn: () => void;
};

const FRAME_MS = 16;

/**
 * Virtual time for page scripts.  Timers and animation frames fire in
 * (due, registration) order while the renderer advances to the settle
 * deadline; no wall-clock waiting is involved, which is what makes repeated
 * renders of the same page bit-identical.
 */
export class VirtualClock {
  now = 0;
  private nextId = 1;
  private seq = 0;
  private timers = new Map<number, Timer>();

  setTimeout(fn: () => void, delay = 0): number {
    const id = this.nextId++;
    this.timers.set(id, { id, due: this.now + Math.max(0, delay), seq: this.seq++, fn });
    return id;
  }

  clearTimeout(id: number): void {
    this.timers.delete(id);
  }

  requestAnimationFrame(fn: (timestamp: number) => void): number {
    const due = (Math.floor(this.now / FRAME_MS) + 1) * FRAME_MS;
    const id = this.nextId++;
    this.timers.set(id, { id, due, seq: this.seq++, fn: () => fn(this.now) });
    return id;
  }

  cancelAnimationFrame(id: number): void {
    this.timers.delete(id);
  }

  /** Run every timer due by the deadline, then park the clock there. */
  advanceTo(deadline: number, onError: (err: unknown) => void): void {
    for (;;) {
      let next: Timer | null = null;
      for (const timer of this.timers.values()) {
        if (timer.due > deadline) continue;
        if (!next || timer.due < next.due || (timer.due === next.due && timer.seq < next.seq)) {
          next = timer;
        }
      }
      if (!next) break;
      this.timers.delete(next.id);
      this.now = Math.max(this.now, next.due);
      try {
        next.fn();
      } catch (err) {
        onError(err);
      }
    }
    this.now = deadline;
  }
}
