import { ConnectionStatus } from './client'
import { Snapshot, SnapshotNote } from './types'

/** Everything a render pass may look at: the latest engine snapshot and
 * the connection status.  There is deliberately no other state — the UI
 * never simulates engine logic locally. */
export interface UiState {
  snapshot: Snapshot | null
  connection: ConnectionStatus
}

export type Listener = (state: UiState) => void

export class UiStore {
  private state: UiState = { snapshot: null, connection: 'closed' }
  private listeners: Listener[] = []

  get current(): UiState {
    return this.state
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener)
    listener(this.state)
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener)
    }
  }

  setSnapshot(snapshot: Snapshot): void {
    this.state = { ...this.state, snapshot }
    this.emit()
  }

  setConnection(connection: ConnectionStatus): void {
    this.state = { ...this.state, connection }
    this.emit()
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.state)
  }
}

/** Text for the improv phase badge, e.g. "ACCUMULATING 3/16",
 * "GENERATING…", "REPLACING 5 left"; a disengaged gate freezes the
 * cycle, shown with a pedal marker. */
export function phaseBadge(snapshot: Snapshot): string {
  let text: string
  switch (snapshot.phase) {
    case 'accumulating':
      text = `ACCUMULATING ${snapshot.accumulated}/${snapshot.threshold}`
      break
    case 'awaiting_generation':
      text = 'GENERATING…'
      break
    case 'replacing':
      text = `REPLACING ${snapshot.queue_depth} left`
      break
  }
  return snapshot.gate ? text : `⏸ ${text} (gate off)`
}

/** Rows of the loop grid, one per sounding instrument, in display
 * order: clicks on top, then bass, chords, drums. */
export interface GridRow {
  instrument: string
  track: string
  cells: SnapshotNote[]
}

const ROW_ORDER = [
  'click-1',
  'click-2',
  'click-3',
  'bass',
  'keys',
  'kick',
  'snare',
  'hihat',
  'crash',
]

export function gridRows(snapshot: Snapshot): GridRow[] {
  const byInstrument = new Map<string, SnapshotNote[]>()
  for (const note of snapshot.notes) {
    const cells = byInstrument.get(note.instrument)
    if (cells) cells.push(note)
    else byInstrument.set(note.instrument, [note])
  }
  const rows: GridRow[] = []
  for (const instrument of ROW_ORDER) {
    const cells = byInstrument.get(instrument)
    if (!cells) continue
    cells.sort((a, b) => a.position - b.position)
    rows.push({ instrument, track: cells[0].track, cells })
  }
  return rows
}

/** Playhead position as a fraction of the loop, for the moving cursor. */
export function playheadFraction(snapshot: Snapshot): number {
  if (snapshot.spec.length <= 0) return 0
  return snapshot.playhead / snapshot.spec.length
}

/** Computer-keyboard note entry: two rows starting at C4, white keys on
 * the home row, black keys above — the familiar tracker layout. */
export const KEY_TO_PITCH: Record<string, number> = {
  a: 60, // C4
  w: 61,
  s: 62,
  e: 63,
  d: 64,
  f: 65,
  t: 66,
  g: 67,
  y: 68,
  h: 69,
  u: 70,
  j: 71,
  k: 72, // C5
  o: 73,
  l: 74,
}

export const MODES = ['free', 'bass', 'chords', 'improv'] as const
