// Line protocol: each stdin line is a standard-json compiler input, each
// stdout line the matching compiler output. The first output line is the
// compiler version.
const readline = require('readline');
const solc = require('solc');

process.stdout.write(JSON.stringify({ version: solc.version() }) + '\n');
const rl = readline.createInterface({ input: process.stdin, terminal: false });
rl.on('line', (line) => {
  if (!line.trim()) return;
  let out;
  try {
    out = solc.compile(line);
  } catch (e) {
    out = JSON.stringify({ errors: [{ severity: 'error', type: 'InternalError', formattedMessage: String(e) }] });
  }
  process.stdout.write(out.replace(/\n/g, ' ') + '\n');
});
