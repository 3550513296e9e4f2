import { SocketLike } from '../src/client'
import { Snapshot } from '../src/types'

/** Scriptable stand-in for a WebSocket. */
export class FakeSocket implements SocketLike {
  onopen: (() => void) | null = null
  onclose: (() => void) | null = null
  onerror: (() => void) | null = null
  onmessage: ((event: { data: unknown }) => void) | null = null
  sent: string[] = []
  closed = false

  send(data: string): void {
    this.sent.push(data)
  }

  close(): void {
    if (this.closed) return
    this.closed = true
    this.onclose?.()
  }

  // test-side controls
  open(): void {
    this.onopen?.()
  }

  receive(frame: unknown): void {
    this.onmessage?.({
      data: typeof frame === 'string' ? frame : JSON.stringify(frame),
    })
  }

  dropFromServer(): void {
    this.close()
  }
}

export function makeSnapshot(overrides: Partial<Snapshot> = {}): Snapshot {
  return {
    v: 1,
    rev: 0,
    playing: false,
    mode: 'free',
    phase: 'accumulating',
    playhead: 0,
    qpm: 120,
    spec: { bars: 2, numerator: 4, denominator: 4, length: 32 },
    threshold: 16,
    accumulated: 0,
    queue_depth: 0,
    gate: true,
    click_muted: false,
    drum_source: null,
    notes: [
      { track: 'click', pitch: 76, instrument: 'click-1', position: 0, duration: 1 },
      { track: 'click', pitch: 78, instrument: 'click-3', position: 4, duration: 1 },
      { track: 'click', pitch: 77, instrument: 'click-2', position: 16, duration: 1 },
    ],
    ...overrides,
  }
}
