import { LooperClient } from './client'
import { KEY_TO_PITCH, UiState } from './state'

const WHITE = [0, 2, 4, 5, 7, 9, 11]
const LOW = 48 // C3
const HIGH = 72 // C5

/** On-screen piano.  Mouse/touch presses and the tracker-style computer
 * key rows both emit note_on/note_off commands with the slider
 * velocity; every press gets a paired release. */
export class VirtualKeyboard {
  readonly root: HTMLElement
  private keys = new Map<number, HTMLElement>()
  private down = new Set<number>()
  private velocitySlider: HTMLInputElement

  constructor(private readonly client: LooperClient, doc: Document = document) {
    this.root = doc.createElement('section')
    this.root.className = 'panel keyboard'

    this.velocitySlider = doc.createElement('input')
    this.velocitySlider.type = 'range'
    this.velocitySlider.min = '1'
    this.velocitySlider.max = '127'
    this.velocitySlider.value = '100' // mouse clicks carry no pressure
    this.velocitySlider.dataset.role = 'velocity'
    this.root.append(this.velocitySlider)

    const bed = doc.createElement('div')
    bed.className = 'keybed'
    let whiteIndex = 0
    let whiteCount = 0
    for (let pitch = LOW; pitch <= HIGH; pitch++) {
      if (WHITE.includes(pitch % 12)) whiteCount++
    }
    const width = 100 / whiteCount
    for (let pitch = LOW; pitch <= HIGH; pitch++) {
      const isWhite = WHITE.includes(pitch % 12)
      const key = doc.createElement('div')
      key.dataset.pitch = String(pitch)
      if (isWhite) {
        key.className = 'key white'
        key.style.left = `${whiteIndex * width}%`
        key.style.width = `${width}%`
        whiteIndex++
      } else {
        key.className = 'key black'
        key.style.left = `${(whiteIndex - 1) * width + width * 0.65}%`
        key.style.width = `${width * 0.7}%`
      }
      key.addEventListener('pointerdown', () => this.press(pitch))
      key.addEventListener('pointerup', () => this.release(pitch))
      key.addEventListener('pointerleave', () => this.release(pitch))
      this.keys.set(pitch, key)
      bed.append(key)
    }
    this.root.append(bed)
  }

  /** Wire up tracker-style note entry; pass the window (or a test double). */
  attachComputerKeys(target: {
    addEventListener(type: string, fn: (ev: KeyboardEvent) => void): void
  }): void {
    target.addEventListener('keydown', (ev) => {
      const pitch = KEY_TO_PITCH[ev.key]
      if (pitch !== undefined && !ev.repeat) this.press(pitch)
    })
    target.addEventListener('keyup', (ev) => {
      const pitch = KEY_TO_PITCH[ev.key]
      if (pitch !== undefined) this.release(pitch)
    })
  }

  press(pitch: number): void {
    if (this.down.has(pitch)) return
    if (!this.client.send({
      cmd: 'note_on', pitch, velocity: Number(this.velocitySlider.value),
    })) return
    this.down.add(pitch)
    this.keys.get(pitch)?.classList.add('pressed')
  }

  release(pitch: number): void {
    if (!this.down.has(pitch)) return
    this.down.delete(pitch)
    this.client.send({ cmd: 'note_off', pitch })
    this.keys.get(pitch)?.classList.remove('pressed')
  }

  render(state: UiState): void {
    const disconnected = state.connection !== 'open'
    this.root.classList.toggle('disabled', disconnected)
    if (disconnected) {
      // connection dropped mid-press: releases can no longer be
      // delivered, so drop the local highlights too
      for (const pitch of this.down) {
        this.keys.get(pitch)?.classList.remove('pressed')
      }
      this.down.clear()
    }
  }
}
