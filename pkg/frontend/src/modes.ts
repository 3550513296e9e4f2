import { LooperClient } from './client'
import { MODES, UiState, phaseBadge } from './state'
import { Mode } from './types'

/** Mode panel: the four mode buttons, the improv phase badge, the gate
 * pedal toggle, click mute, and the drum buttons. */
export class ModePanel {
  readonly root: HTMLElement
  private modeButtons = new Map<Mode, HTMLButtonElement>()
  private badge: HTMLSpanElement
  private gateBtn: HTMLButtonElement
  private clickMuteBtn: HTMLButtonElement
  private deriveBtn: HTMLButtonElement
  private generateBtn: HTMLButtonElement
  private drumSource: HTMLSpanElement

  constructor(private readonly client: LooperClient, doc: Document = document) {
    this.root = doc.createElement('section')
    this.root.className = 'panel modes'

    for (const mode of MODES) {
      const btn = doc.createElement('button')
      btn.dataset.role = `mode-${mode}`
      btn.textContent = mode
      btn.addEventListener('click', () =>
        this.client.send({ cmd: 'mode', value: mode }),
      )
      this.modeButtons.set(mode, btn)
      this.root.append(btn)
    }

    this.badge = doc.createElement('span')
    this.badge.className = 'phase-badge'
    this.badge.dataset.role = 'phase-badge'

    this.gateBtn = doc.createElement('button')
    this.gateBtn.dataset.role = 'gate'
    this.gateBtn.addEventListener('click', () => {
      const snapshot = this.lastState?.snapshot
      if (snapshot) this.client.send({ cmd: 'gate', value: !snapshot.gate })
    })

    this.clickMuteBtn = doc.createElement('button')
    this.clickMuteBtn.dataset.role = 'click-mute'
    this.clickMuteBtn.addEventListener('click', () => {
      const snapshot = this.lastState?.snapshot
      if (snapshot) {
        this.client.send({ cmd: 'click_mute', value: !snapshot.click_muted })
      }
    })

    this.deriveBtn = doc.createElement('button')
    this.deriveBtn.dataset.role = 'drums-derive'
    this.deriveBtn.textContent = 'Derive drums'
    this.deriveBtn.addEventListener('click', () =>
      this.client.send({ cmd: 'drums_derive' }),
    )
    this.generateBtn = doc.createElement('button')
    this.generateBtn.dataset.role = 'drums-generate'
    this.generateBtn.textContent = 'Generate drums'
    this.generateBtn.addEventListener('click', () =>
      this.client.send({ cmd: 'drums_generate' }),
    )
    this.drumSource = doc.createElement('span')
    this.drumSource.dataset.role = 'drum-source'

    this.root.append(
      this.badge, this.gateBtn, this.clickMuteBtn,
      this.deriveBtn, this.generateBtn, this.drumSource,
    )
  }

  private lastState: UiState | null = null

  render(state: UiState): void {
    this.lastState = state
    const snapshot = state.snapshot
    const disconnected = state.connection !== 'open'
    // modes act on the live loop, so they need both connection and playback
    const modesLocked = disconnected || snapshot === null || !snapshot.playing
    for (const btn of this.modeButtons.values()) btn.disabled = modesLocked
    for (const btn of [this.gateBtn, this.clickMuteBtn, this.deriveBtn, this.generateBtn]) {
      btn.disabled = disconnected
    }
    if (snapshot === null) return
    for (const [mode, btn] of this.modeButtons) {
      btn.classList.toggle('active', snapshot.mode === mode)
    }
    this.badge.textContent =
      snapshot.mode === 'improv' ? phaseBadge(snapshot) : ''
    this.badge.classList.toggle('frozen', !snapshot.gate)
    this.gateBtn.textContent = snapshot.gate ? 'Gate: on' : 'Gate: off'
    this.clickMuteBtn.textContent =
      snapshot.click_muted ? 'Click: muted' : 'Click: on'
    this.drumSource.textContent =
      snapshot.drum_source === null ? '' : `drums: ${snapshot.drum_source}`
  }
}
