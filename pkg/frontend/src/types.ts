/** Wire types mirroring the engine's WebSocket JSON schema (v1). */

export type Mode = 'free' | 'bass' | 'chords' | 'improv'
export type Phase = 'accumulating' | 'awaiting_generation' | 'replacing'
export type Track = 'click' | 'bass' | 'chords' | 'drums'

export interface SnapshotNote {
  track: Track
  pitch: number
  instrument: string
  position: number
  duration: number
}

export interface LoopSpecInfo {
  bars: number
  numerator: number
  denominator: number
  /** total loop length in 16th steps */
  length: number
}

export interface Snapshot {
  v: number
  rev: number
  playing: boolean
  mode: Mode
  phase: Phase
  playhead: number
  qpm: number
  spec: LoopSpecInfo
  threshold: number
  accumulated: number
  queue_depth: number
  gate: boolean
  click_muted: boolean
  drum_source: 'deterministic' | 'generated' | null
  notes: SnapshotNote[]
}

export type Command =
  | { cmd: 'play' }
  | { cmd: 'stop' }
  | { cmd: 'tap' }
  | { cmd: 'qpm'; value: number }
  | { cmd: 'spec'; bars: number; numerator: number; denominator: number }
  | { cmd: 'mode'; value: Mode }
  | { cmd: 'gate'; value: boolean }
  | { cmd: 'click_mute'; value: boolean }
  | { cmd: 'drums_derive' }
  | { cmd: 'drums_generate' }
  | { cmd: 'note_on'; pitch: number; velocity: number }
  | { cmd: 'note_off'; pitch: number }

export interface ErrorFrame {
  error: string
}

/** Narrow an incoming frame to a Snapshot; null for error frames or junk.
 * The UI never invents state, so anything that is not a well-formed
 * snapshot is simply not rendered. */
export function parseSnapshot(raw: unknown): Snapshot | null {
  if (typeof raw !== 'object' || raw === null) return null
  const o = raw as Record<string, unknown>
  if (o.v !== 1) return null
  if (
    typeof o.rev !== 'number' ||
    typeof o.playing !== 'boolean' ||
    typeof o.mode !== 'string' ||
    typeof o.phase !== 'string' ||
    typeof o.playhead !== 'number' ||
    typeof o.qpm !== 'number' ||
    !Array.isArray(o.notes)
  ) {
    return null
  }
  return o as unknown as Snapshot
}
