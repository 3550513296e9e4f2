import { GridRow, UiState, gridRows, playheadFraction } from './state'

/** Piano-roll-style view of the loop: one row per instrument, one cell
 * per 16th step, and a moving playhead line.  Pure projection of the
 * snapshot — nothing here is clickable. */
export class LoopGrid {
  readonly root: HTMLElement
  private table: HTMLElement
  private playhead: HTMLElement
  private renderedRev = -1
  private renderedLength = -1

  constructor(private readonly doc: Document = document) {
    this.root = doc.createElement('section')
    this.root.className = 'panel grid'
    this.table = doc.createElement('div')
    this.table.className = 'grid-rows'
    this.playhead = doc.createElement('div')
    this.playhead.className = 'playhead'
    this.root.append(this.table, this.playhead)
  }

  render(state: UiState): void {
    const snapshot = state.snapshot
    if (snapshot === null) return
    this.playhead.style.left = `${playheadFraction(snapshot) * 100}%`
    // note contents only change when rev moves or the loop is resized
    if (snapshot.rev === this.renderedRev &&
        snapshot.spec.length === this.renderedLength) {
      return
    }
    this.renderedRev = snapshot.rev
    this.renderedLength = snapshot.spec.length
    this.table.replaceChildren(
      ...gridRows(snapshot).map((row) => this.buildRow(row, snapshot.spec.length)),
    )
  }

  private buildRow(row: GridRow, length: number): HTMLElement {
    const el = this.doc.createElement('div')
    el.className = `grid-row track-${row.track}`
    el.dataset.instrument = row.instrument
    const label = this.doc.createElement('span')
    label.className = 'row-label'
    label.textContent = row.instrument
    el.append(label)
    for (const note of row.cells) {
      const cell = this.doc.createElement('div')
      cell.className = 'cell'
      cell.dataset.position = String(note.position)
      cell.style.left = `${(note.position / length) * 100}%`
      cell.style.width = `${(note.duration / length) * 100}%`
      el.append(cell)
    }
    return el
  }
}
