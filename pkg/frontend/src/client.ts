import { Command, Snapshot, parseSnapshot } from './types'

export type ConnectionStatus = 'connecting' | 'open' | 'closed'

/** The subset of the browser WebSocket API the client needs; injectable
 * so tests can drive a fake. */
export interface SocketLike {
  onopen: (() => void) | null
  onclose: (() => void) | null
  onerror: (() => void) | null
  onmessage: ((event: { data: unknown }) => void) | null
  send(data: string): void
  close(): void
}

export type SocketFactory = (url: string) => SocketLike

export interface ClientOptions {
  /** first retry delay; doubles per attempt */
  backoffBaseMs?: number
  backoffCapMs?: number
  socketFactory?: SocketFactory
  setTimer?: (fn: () => void, ms: number) => unknown
  clearTimer?: (id: unknown) => void
}

/** WebSocket client for the engine: receives snapshots, sends commands,
 * reconnects with exponential backoff.  Holds no musical state of its
 * own — consumers render purely from the snapshots it relays. */
export class LooperClient {
  onSnapshot: ((snapshot: Snapshot) => void) | null = null
  onStatus: ((status: ConnectionStatus) => void) | null = null

  private socket: SocketLike | null = null
  private status: ConnectionStatus = 'closed'
  private attempts = 0
  private retryTimer: unknown = null
  private stopped = false

  private readonly backoffBaseMs: number
  private readonly backoffCapMs: number
  private readonly socketFactory: SocketFactory
  private readonly setTimer: (fn: () => void, ms: number) => unknown
  private readonly clearTimer: (id: unknown) => void

  constructor(private readonly url: string, options: ClientOptions = {}) {
    this.backoffBaseMs = options.backoffBaseMs ?? 250
    this.backoffCapMs = options.backoffCapMs ?? 8000
    this.socketFactory =
      options.socketFactory ?? ((u) => new WebSocket(u) as unknown as SocketLike)
    this.setTimer = options.setTimer ?? ((fn, ms) => setTimeout(fn, ms))
    this.clearTimer = options.clearTimer ?? ((id) => clearTimeout(id as never))
  }

  connect(): void {
    this.stopped = false
    this.open()
  }

  close(): void {
    this.stopped = true
    if (this.retryTimer !== null) {
      this.clearTimer(this.retryTimer)
      this.retryTimer = null
    }
    this.socket?.close()
    this.socket = null
    this.setStatus('closed')
  }

  get connected(): boolean {
    return this.status === 'open'
  }

  /** Send a command; returns false (dropping it) when disconnected.
   * Controls are disabled while disconnected, so nothing queues. */
  send(command: Command): boolean {
    if (this.status !== 'open' || this.socket === null) return false
    this.socket.send(JSON.stringify(command))
    return true
  }

  /** Retry delay for the given attempt number (exposed for tests). */
  backoffMs(attempt: number): number {
    return Math.min(this.backoffBaseMs * 2 ** attempt, this.backoffCapMs)
  }

  private open(): void {
    this.setStatus('connecting')
    const socket = this.socketFactory(this.url)
    this.socket = socket
    socket.onopen = () => {
      this.attempts = 0
      this.setStatus('open')
    }
    socket.onmessage = (event) => {
      let frame: unknown
      try {
        frame = JSON.parse(String(event.data))
      } catch {
        return
      }
      const snapshot = parseSnapshot(frame)
      if (snapshot !== null) this.onSnapshot?.(snapshot)
    }
    socket.onerror = () => socket.close()
    socket.onclose = () => {
      if (this.socket !== socket) return // superseded
      this.socket = null
      this.setStatus('closed')
      this.scheduleRetry()
    }
  }

  private scheduleRetry(): void {
    if (this.stopped || this.retryTimer !== null) return
    const delay = this.backoffMs(this.attempts)
    this.attempts += 1
    this.retryTimer = this.setTimer(() => {
      this.retryTimer = null
      if (!this.stopped) this.open()
    }, delay)
  }

  private setStatus(status: ConnectionStatus): void {
    if (status === this.status) return
    this.status = status
    this.onStatus?.(status)
  }
}
