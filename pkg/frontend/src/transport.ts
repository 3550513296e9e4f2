import { LooperClient } from './client'
import { UiState } from './state'

/** Transport panel: play/stop, tap tempo, qpm slider, loop shape
 * selectors.  Renders purely from the latest snapshot; every
 * interaction becomes exactly one WS command. */
export class TransportPanel {
  readonly root: HTMLElement
  private playBtn: HTMLButtonElement
  private stopBtn: HTMLButtonElement
  private tapBtn: HTMLButtonElement
  private qpmSlider: HTMLInputElement
  private qpmLabel: HTMLSpanElement
  private barsSelect: HTMLSelectElement
  private numeratorSelect: HTMLSelectElement
  private denominatorSelect: HTMLSelectElement
  private specNote: HTMLSpanElement

  constructor(private readonly client: LooperClient, doc: Document = document) {
    this.root = doc.createElement('section')
    this.root.className = 'panel transport'

    this.playBtn = this.button(doc, 'play', '▶ Play', () =>
      this.client.send({ cmd: 'play' }),
    )
    this.stopBtn = this.button(doc, 'stop', '■ Stop', () =>
      this.client.send({ cmd: 'stop' }),
    )
    this.tapBtn = this.button(doc, 'tap', 'Tap', () =>
      this.client.send({ cmd: 'tap' }),
    )

    this.qpmSlider = doc.createElement('input')
    this.qpmSlider.type = 'range'
    this.qpmSlider.min = '20'
    this.qpmSlider.max = '400'
    this.qpmSlider.dataset.role = 'qpm'
    this.qpmSlider.addEventListener('change', () => {
      this.client.send({ cmd: 'qpm', value: Number(this.qpmSlider.value) })
    })
    this.qpmLabel = doc.createElement('span')
    this.qpmLabel.className = 'qpm-label'

    this.barsSelect = this.select(doc, 'bars', ['1', '2', '4', '8'])
    this.numeratorSelect = this.select(
      doc, 'numerator',
      Array.from({ length: 16 }, (_, i) => String(i + 1)),
    )
    this.denominatorSelect = this.select(doc, 'denominator', ['4', '8', '16'])
    const onSpec = () => this.sendSpec()
    this.barsSelect.addEventListener('change', onSpec)
    this.numeratorSelect.addEventListener('change', onSpec)
    this.denominatorSelect.addEventListener('change', onSpec)
    this.specNote = doc.createElement('span')
    this.specNote.className = 'spec-note'

    this.root.append(
      this.playBtn, this.stopBtn, this.tapBtn,
      this.qpmSlider, this.qpmLabel,
      this.barsSelect, this.numeratorSelect, this.denominatorSelect,
      this.specNote,
    )
  }

  render(state: UiState): void {
    const snapshot = state.snapshot
    const disconnected = state.connection !== 'open'
    for (const el of [this.playBtn, this.stopBtn, this.tapBtn, this.qpmSlider]) {
      el.disabled = disconnected
    }
    if (snapshot === null) return
    this.playBtn.classList.toggle('active', snapshot.playing)
    this.qpmSlider.value = String(Math.round(snapshot.qpm))
    this.qpmLabel.textContent = `${snapshot.qpm.toFixed(0)} qpm`
    this.barsSelect.value = String(snapshot.spec.bars)
    this.numeratorSelect.value = String(snapshot.spec.numerator)
    this.denominatorSelect.value = String(snapshot.spec.denominator)
    // the engine rejects loop-shape edits mid-playback
    const specLocked = disconnected || snapshot.playing
    for (const el of [this.barsSelect, this.numeratorSelect, this.denominatorSelect]) {
      el.disabled = specLocked
    }
    this.specNote.textContent =
      snapshot.playing ? 'stop to edit loop shape' : ''
  }

  private sendSpec(): void {
    this.client.send({
      cmd: 'spec',
      bars: Number(this.barsSelect.value),
      numerator: Number(this.numeratorSelect.value),
      denominator: Number(this.denominatorSelect.value),
    })
  }

  private button(
    doc: Document, role: string, label: string, onClick: () => void,
  ): HTMLButtonElement {
    const btn = doc.createElement('button')
    btn.dataset.role = role
    btn.textContent = label
    btn.addEventListener('click', onClick)
    return btn
  }

  private select(doc: Document, role: string, values: string[]): HTMLSelectElement {
    const sel = doc.createElement('select')
    sel.dataset.role = role
    for (const value of values) {
      const opt = doc.createElement('option')
      opt.value = value
      opt.textContent = value
      sel.append(opt)
    }
    return sel
  }
}
