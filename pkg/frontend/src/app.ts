import { ClientOptions, LooperClient } from './client'
import { LoopGrid } from './grid'
import { VirtualKeyboard } from './keyboard'
import { ModePanel } from './modes'
import { UiStore } from './state'
import { TransportPanel } from './transport'

/** Assemble the full control surface into a container element and wire
 * the WS client to the store.  Returns the pieces for tests. */
export function createApp(
  container: HTMLElement,
  url: string,
  options: ClientOptions = {},
  doc?: Document,
) {
  const d = doc ?? container.ownerDocument
  const client = new LooperClient(url, options)
  const store = new UiStore()

  const banner = d.createElement('div')
  banner.className = 'reconnect-banner'
  banner.textContent = 'disconnected — reconnecting…'

  const transport = new TransportPanel(client, d)
  const modes = new ModePanel(client, d)
  const keyboard = new VirtualKeyboard(client, d)
  const grid = new LoopGrid(d)
  container.append(banner, transport.root, modes.root, grid.root, keyboard.root)

  client.onSnapshot = (snapshot) => store.setSnapshot(snapshot)
  client.onStatus = (status) => store.setConnection(status)
  store.subscribe((state) => {
    banner.style.display = state.connection === 'open' ? 'none' : 'block'
    transport.render(state)
    modes.render(state)
    keyboard.render(state)
    grid.render(state)
  })

  client.connect()
  return { client, store, transport, modes, keyboard, grid }
}
