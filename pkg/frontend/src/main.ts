import { createApp } from './app'

const params = new URLSearchParams(location.search)
const url =
  params.get('ws') ??
  `${location.protocol === 'https:' ? 'wss' : 'ws'}://${location.hostname}:8765`

const root = document.getElementById('app')
if (root === null) throw new Error('missing #app container')
const { keyboard } = createApp(root, url)
keyboard.attachComputerKeys(window)
